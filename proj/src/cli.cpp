#include "fgrnn/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "fgrnn/checkpoint.hpp"
#include "fgrnn/data.hpp"
#include "fgrnn/error.hpp"
#include "fgrnn/graph.hpp"
#include "fgrnn/stability.hpp"

namespace fgrnn::cli {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream os(path, mode);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    return os;
}

Graph resolve_graph(const std::optional<std::string>& path, const FrameSequence& data, const RunConfig& cfg) {
    if (path) return load_graph(*path);
    return graph_from_training_frames(data, cfg.train.split, cfg.graph_source, cfg.synthetic.knn_k);
}

struct LoadedModel {
    Checkpoint ck;
    FrameSequence data;
    Graph graph;
    LaplacianSet lap;
};

LoadedModel load_model(const std::string& checkpoint, const std::string& frames,
                       const std::optional<std::string>& graph) {
    LoadedModel m;
    m.ck = load_checkpoint(checkpoint);
    m.data = load_frames(frames);
    m.graph = graph ? load_graph(*graph) : build_knn_graph(m.data[0], 6);
    if (m.graph.checksum() != m.ck.graph_checksum)
        throw ConfigError("graph checksum does not match the checkpoint (was the model trained on another graph?)");
    if (m.data.n_nodes() != m.ck.params.n_nodes() || m.data.n_features() != m.ck.params.n_features)
        throw ConfigError("frame dimensions do not match the checkpoint");
    m.lap = build_laplacians(m.graph);
    return m;
}

ModelParams stability_base_params(const RunConfig& cfg, std::size_t n_nodes) {
    InitOptions opt;
    opt.hidden_dim = 1;
    opt.filter_range = cfg.train.init_range;
    opt.activation = cfg.train.activation;
    opt.propagation = cfg.train.propagation;
    ModelParams p = init_params(ConvFamily::first_order, n_nodes, 3, opt, cfg.train.seed);
    std::get<FeatureTransform>(p.recurrent).weights(0, 0) = cfg.stab_u;
    return p;
}

void add_config_option(CLI::App* sub, std::string& path) {
    sub->add_option("--config", path, "key = value config file");
    sub->allow_extras();
}

RunConfig build_config(const std::string& path, const std::vector<std::string>& extras) {
    RunConfig cfg = path.empty() ? RunConfig{} : load_config(path);
    for (const auto& e : extras) {
        if (!e.starts_with("--")) throw ConfigError("unexpected argument '" + e + "'");
        apply_override(cfg, e);
    }
    return cfg;
}

}  // namespace

void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& rows, bool header) {
    if (header) os << "epoch,train_loss,test_loss,alpha,beta,lr\n";
    for (const auto& r : rows)
        os << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.test_loss) << ',' << fmt(r.alpha) << ','
           << fmt(r.beta) << ',' << fmt(r.lr) << '\n';
}

GenDataResult run_gen_data(const RunConfig& cfg, const std::string& frames_path, const std::string& graph_path) {
    const auto data = generate_synthetic(cfg.synthetic);
    save_frames(data.frames, frames_path);
    save_graph(data.graph, graph_path);
    return {frames_path, graph_path};
}

TrainRun run_train(const RunConfig& cfg, const TrainPaths& paths) {
    const FrameSequence data = load_frames(paths.frames);
    if (data.n_frames() == 0) throw ConfigError("frame file has no frames");
    const Graph g = resolve_graph(paths.graph, data, cfg);

    std::optional<TrainState> resume;
    if (paths.resume) {
        Checkpoint ck = load_checkpoint(*paths.resume);
        if (ck.graph_checksum != g.checksum()) throw ConfigError("graph checksum does not match the checkpoint");
        TrainState s;
        s.adam = ck.adam ? *ck.adam : AdamState::for_params(ck.params, cfg.train.adam);
        s.params = std::move(ck.params);
        s.epochs_completed = ck.epochs_completed;
        resume = std::move(s);
    }

    std::filesystem::create_directories(paths.out_dir);
    TrainRun run = train(cfg.train, data, g, std::move(resume));

    const auto hist_path = (std::filesystem::path(paths.out_dir) / "history.csv").string();
    const bool append = paths.resume && std::filesystem::exists(hist_path);
    {
        auto os = open_out(hist_path, append ? std::ios::app : std::ios::out);
        write_history_csv(os, run.history, !append);
    }
    Checkpoint ck{run.state.params, g.checksum(), run.state.epochs_completed, run.state.adam};
    save_checkpoint(ck, (std::filesystem::path(paths.out_dir) / "checkpoint.txt").string());
    return run;
}

double run_eval(const std::string& checkpoint, const std::string& frames, const std::optional<std::string>& graph,
                std::ostream& csv) {
    const auto m = load_model(checkpoint, frames, graph);
    const auto r = teacher_forced(m.ck.params, m.lap, m.data.frames(), 1);
    csv << "frame,loss,copy_last_loss\n";
    double total = 0.0;
    for (std::size_t i = 0; i < r.losses.size(); ++i) {
        const std::size_t t = i + 1;
        const DenseMatrix d = m.data[t] - m.data[t - 1];
        csv << t << ',' << fmt(r.losses[i]) << ',' << fmt(frobenius_dot(d, d)) << '\n';
        total += r.losses[i];
    }
    return r.losses.empty() ? 0.0 : total / static_cast<double>(r.losses.size());
}

void run_predict(const std::string& checkpoint, const std::string& frames, const std::optional<std::string>& graph,
                 std::size_t horizon, const std::string& out_path) {
    const auto m = load_model(checkpoint, frames, graph);
    FrameSequence out(m.data.n_nodes(), m.data.n_features());
    if (horizon == 1) {
        for (auto& f : teacher_forced(m.ck.params, m.lap, m.data.frames(), 1).predictions) out.push_back(std::move(f));
    } else if (horizon > 1) {
        for (auto& f : autoregressive(m.ck.params, m.lap, m.data.frames(), horizon)) out.push_back(std::move(f));
    }
    save_frames(out, out_path);
}

void run_stability(const RunConfig& cfg, const std::optional<std::string>& graph, std::ostream& csv) {
    Graph g;
    if (graph) {
        g = load_graph(*graph);
    } else {
        SyntheticConfig sc = cfg.synthetic;
        sc.n_nodes = cfg.stab_nodes;
        sc.n_frames = 1;
        g = generate_synthetic(sc).graph;
    }
    const ModelParams base = stability_base_params(cfg, g.n_nodes());
    for (std::size_t t : cfg.T_grid)
        if (t < 2) throw ConfigError("T_grid entries must be at least 2");
    const auto rows = stability_sweep(g, base, cfg.alpha_grid, cfg.beta_grid, cfg.T_grid, cfg.train.seed);
    write_sweep_csv(csv, rows);
}

std::size_t run_params(const std::string& family, std::size_t n, std::size_t k, std::size_t p) {
    return count_params(parse_param_family(family), n, k, p);
}

std::vector<SweepTRow> run_sweep_T(const RunConfig& cfg, const FrameSequence& data, const Graph& g) {
    if (cfg.T_list.empty()) throw ConfigError("T_list must not be empty");
    std::set<std::size_t> seen;
    for (std::size_t t : cfg.T_list)
        if (!seen.insert(t).second) throw ConfigError("duplicate T value " + std::to_string(t) + " in T_list");
    const std::vector<std::uint64_t> seeds = cfg.seeds.empty() ? std::vector<std::uint64_t>{cfg.train.seed} : cfg.seeds;

    std::vector<SweepTRow> rows;
    for (std::size_t t : cfg.T_list) {
        SweepTRow row;
        row.T = t;
        try {
            for (std::uint64_t s : seeds) {
                TrainConfig tc = cfg.train;
                tc.window = t;
                tc.seed = s;
                const TrainRun run = train(tc, data, g);
                if (run.failure) throw NumericError(*run.failure, 0);
                row.final_alpha += run.state.params.alpha;
                row.final_beta += run.state.params.beta;
                row.test_loss += run.history.empty() ? std::nan("") : run.history.back().test_loss;
            }
            const double n = static_cast<double>(seeds.size());
            row.final_alpha /= n;
            row.final_beta /= n;
            row.test_loss /= n;
        } catch (const std::exception& e) {
            row.final_alpha = row.final_beta = row.test_loss = std::nan("");
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_sweep_T_csv(std::ostream& os, const std::vector<SweepTRow>& rows) {
    os << "T,final_alpha,final_beta,test_loss\n";
    for (const auto& r : rows) {
        if (r.error) os << "# T=" << r.T << " failed: " << *r.error << '\n';
        os << r.T << ',' << fmt(r.final_alpha) << ',' << fmt(r.final_beta) << ',' << fmt(r.test_loss) << '\n';
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fast graph recurrent network toolkit"};
    app.require_subcommand(1);
    app.name(args.empty() ? "fgrnn" : args.front());

    std::string config_path, frames, graph, out_path, out_dir = ".", resume, checkpoint;
    std::size_t horizon = 1;

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic point-cloud sequence and its kNN graph");
    add_config_option(gen, config_path);
    std::string gen_frames = "frames.gfrm", gen_graph = "graph.txt";
    gen->add_option("--frames", gen_frames, "output frame file")->capture_default_str();
    gen->add_option("--graph", gen_graph, "output edge list")->capture_default_str();

    auto* tr = app.add_subcommand("train", "Train a model with truncated BPTT and Adam");
    add_config_option(tr, config_path);
    tr->add_option("--frames", frames, "frame file")->required();
    tr->add_option("--graph", graph, "edge list (default: kNN graph of the training frames)");
    tr->add_option("--out-dir", out_dir, "directory for checkpoint.txt and history.csv")->capture_default_str();
    tr->add_option("--resume", resume, "checkpoint to continue from");

    auto* ev = app.add_subcommand("eval", "Per-frame one-step losses of a checkpoint");
    ev->add_option("--checkpoint", checkpoint)->required();
    ev->add_option("--frames", frames)->required();
    ev->add_option("--graph", graph);
    ev->add_option("--out", out_path, "CSV output (default: stdout)");

    auto* pr = app.add_subcommand("predict", "Write predicted frames");
    pr->add_option("--checkpoint", checkpoint)->required();
    pr->add_option("--frames", frames)->required();
    pr->add_option("--graph", graph);
    pr->add_option("--horizon", horizon)->capture_default_str();
    pr->add_option("--out", out_path)->required();

    auto* st = app.add_subcommand("stability", "Jacobian-product conditioning sweep");
    add_config_option(st, config_path);
    st->add_option("--graph", graph, "edge list (default: synthetic graph with stab_nodes nodes)");
    st->add_option("--out", out_path, "CSV output (default: stdout)");

    auto* pa = app.add_subcommand("params", "Count trainable parameters");
    std::string family;
    std::size_t pn = 0, pk = 0, pp = 0;
    pa->add_option("family", family, "chebyshev | first_order | dense_frnn | lstm_dense | lstm_gcn")->required();
    pa->add_option("--n", pn, "number of nodes N")->required();
    pa->add_option("--k", pk, "Chebyshev order K");
    pa->add_option("--p", pp, "hidden dimension P");

    auto* sw = app.add_subcommand("sweep-T", "Train one model per window length T");
    add_config_option(sw, config_path);
    sw->add_option("--frames", frames)->required();
    sw->add_option("--graph", graph);
    std::string t_list;
    sw->add_option("--T", t_list, "comma-separated window lengths (overrides T_list)");
    sw->add_option("--out", out_path, "CSV output (default: stdout)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    auto opt = [](const std::string& s) { return s.empty() ? std::optional<std::string>{} : std::optional{s}; };
    auto with_output = [&](auto&& body) {
        if (out_path.empty()) {
            body(out);
        } else {
            auto os = open_out(out_path);
            body(os);
        }
    };

    try {
        if (*gen) {
            const RunConfig cfg = build_config(config_path, gen->remaining());
            run_gen_data(cfg, gen_frames, gen_graph);
            out << "wrote " << gen_frames << " and " << gen_graph << '\n';
        } else if (*tr) {
            const RunConfig cfg = build_config(config_path, tr->remaining());
            const TrainRun run = run_train(cfg, {frames, opt(graph), out_dir, opt(resume)});
            if (!run.history.empty())
                out << "epoch " << run.history.back().epoch << " train_loss " << fmt(run.history.back().train_loss)
                    << " test_loss " << fmt(run.history.back().test_loss) << " copy_last_baseline "
                    << fmt(run.baseline_test_loss) << '\n';
            if (run.failure) {
                err << "numeric failure: " << *run.failure << '\n';
                return kExitNumeric;
            }
        } else if (*ev) {
            double mean = 0.0;
            with_output([&](std::ostream& os) { mean = run_eval(checkpoint, frames, opt(graph), os); });
            err << "mean loss " << fmt(mean) << '\n';
        } else if (*pr) {
            run_predict(checkpoint, frames, opt(graph), horizon, out_path);
        } else if (*st) {
            const RunConfig cfg = build_config(config_path, st->remaining());
            with_output([&](std::ostream& os) { run_stability(cfg, opt(graph), os); });
        } else if (*pa) {
            out << run_params(family, pn, pk, pp) << '\n';
        } else if (*sw) {
            RunConfig cfg = build_config(config_path, sw->remaining());
            if (!t_list.empty()) cfg.set("T_list", t_list);
            const FrameSequence data = load_frames(frames);
            if (data.n_frames() == 0) throw ConfigError("frame file has no frames");
            const Graph g = resolve_graph(opt(graph), data, cfg);
            const auto rows = run_sweep_T(cfg, data, g);
            with_output([&](std::ostream& os) { write_sweep_T_csv(os, rows); });
        }
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}

}  // namespace fgrnn::cli
