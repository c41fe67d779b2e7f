#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fgrnn/config.hpp"
#include "fgrnn/training.hpp"

namespace fgrnn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

/// Parses argv and dispatches to a subcommand. Never throws; returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct GenDataResult {
    std::string frames_path;
    std::string graph_path;
};
GenDataResult run_gen_data(const RunConfig& cfg, const std::string& frames_path, const std::string& graph_path);

struct TrainPaths {
    std::string frames;
    std::optional<std::string> graph;   // built from the frames when absent
    std::string out_dir = ".";
    std::optional<std::string> resume;  // checkpoint to continue from
};
/// Writes <out_dir>/checkpoint.txt and <out_dir>/history.csv (appended to when resuming).
TrainRun run_train(const RunConfig& cfg, const TrainPaths& paths);

/// Per-target losses "frame,loss,copy_last_loss"; returns the mean loss.
double run_eval(const std::string& checkpoint, const std::string& frames, const std::optional<std::string>& graph,
                std::ostream& csv);

/// horizon 1: teacher-forced one-step predictions of frames 1..T-1.
/// horizon > 1: `horizon` frames rolled out past the end of the data.
void run_predict(const std::string& checkpoint, const std::string& frames, const std::optional<std::string>& graph,
                 std::size_t horizon, const std::string& out_path);

void run_stability(const RunConfig& cfg, const std::optional<std::string>& graph, std::ostream& csv);

std::size_t run_params(const std::string& family, std::size_t n, std::size_t k, std::size_t p);

struct SweepTRow {
    std::size_t T = 0;
    double final_alpha = 0.0;
    double final_beta = 0.0;
    double test_loss = 0.0;
    std::optional<std::string> error;
};
/// One model per window length; values are averaged over cfg.seeds when given.
std::vector<SweepTRow> run_sweep_T(const RunConfig& cfg, const FrameSequence& data, const Graph& g);
void write_sweep_T_csv(std::ostream& os, const std::vector<SweepTRow>& rows);

void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& rows, bool header = true);

}  // namespace fgrnn::cli
