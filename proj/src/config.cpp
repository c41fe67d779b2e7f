#include "fgrnn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "fgrnn/error.hpp"

namespace fgrnn {

namespace {

std::string_view trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
    v = trim(v);
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("invalid value '" + std::string(v) + "' for key '" + std::string(key) + "'");
    return out;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view v) {
    std::vector<T> out;
    v = trim(v);
    if (v.empty()) throw ConfigError("empty list for key '" + std::string(key) + "'");
    std::size_t pos = 0;
    while (pos <= v.size()) {
        const auto comma = v.find(',', pos);
        const auto item = v.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        out.push_back(parse_number<T>(key, item));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

using Setter = std::function<void(RunConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = [] {
        std::map<std::string, Setter, std::less<>> m;
        m["family"] = [](RunConfig& c, auto, auto v) { c.train.family = parse_conv_family(trim(v)); };
        m["K"] = [](RunConfig& c, auto k, auto v) { c.train.order = parse_number<std::size_t>(k, v); };
        m["P"] = [](RunConfig& c, auto k, auto v) { c.train.hidden_dim = parse_number<std::size_t>(k, v); };
        m["T_w"] = [](RunConfig& c, auto k, auto v) { c.train.window = parse_number<std::size_t>(k, v); };
        m["stride"] = [](RunConfig& c, auto k, auto v) { c.train.stride = parse_number<std::size_t>(k, v); };
        m["epochs"] = [](RunConfig& c, auto k, auto v) { c.train.epochs = parse_number<std::size_t>(k, v); };
        m["lr"] = [](RunConfig& c, auto k, auto v) { c.train.adam.learning_rate = parse_number<double>(k, v); };
        m["lr_decay"] = [](RunConfig& c, auto k, auto v) {
            c.train.adam.lr_decay_per_epoch = parse_number<double>(k, v);
        };
        m["adam_beta1"] = [](RunConfig& c, auto k, auto v) { c.train.adam.beta1 = parse_number<double>(k, v); };
        m["adam_beta2"] = [](RunConfig& c, auto k, auto v) { c.train.adam.beta2 = parse_number<double>(k, v); };
        m["adam_eps"] = [](RunConfig& c, auto k, auto v) { c.train.adam.epsilon = parse_number<double>(k, v); };
        m["split"] = [](RunConfig& c, auto k, auto v) { c.train.split = parse_number<double>(k, v); };
        m["activation"] = [](RunConfig& c, auto, auto v) { c.train.activation = parse_activation(trim(v)); };
        m["propagation"] = [](RunConfig& c, auto, auto v) {
            c.train.propagation = parse_first_order_operator(trim(v));
        };
        m["lambda_reg"] = [](RunConfig& c, auto k, auto v) { c.train.lambda_reg = parse_number<double>(k, v); };
        m["init_range"] = [](RunConfig& c, auto k, auto v) { c.train.init_range = parse_number<double>(k, v); };
        m["init_alpha"] = [](RunConfig& c, auto k, auto v) { c.train.init_alpha = parse_number<double>(k, v); };
        m["init_beta"] = [](RunConfig& c, auto k, auto v) { c.train.init_beta = parse_number<double>(k, v); };
        m["seed"] = [](RunConfig& c, auto k, auto v) {
            c.train.seed = parse_number<std::uint64_t>(k, v);
            c.synthetic.seed = c.train.seed;
        };
        m["graph_source"] = [](RunConfig& c, auto, auto v) { c.graph_source = parse_graph_source(trim(v)); };
        m["knn_k"] = [](RunConfig& c, auto k, auto v) { c.synthetic.knn_k = parse_number<std::size_t>(k, v); };
        m["n_nodes"] = [](RunConfig& c, auto k, auto v) { c.synthetic.n_nodes = parse_number<std::size_t>(k, v); };
        m["n_frames"] = [](RunConfig& c, auto k, auto v) { c.synthetic.n_frames = parse_number<std::size_t>(k, v); };
        m["shape"] = [](RunConfig& c, auto, auto v) { c.synthetic.base_shape = parse_base_shape(trim(v)); };
        m["rotation_rate"] = [](RunConfig& c, auto k, auto v) {
            c.synthetic.rotation_rate = parse_number<double>(k, v);
        };
        m["deformation_amplitude"] = [](RunConfig& c, auto k, auto v) {
            c.synthetic.deformation_amplitude = parse_number<double>(k, v);
        };
        m["deformation_frequency"] = [](RunConfig& c, auto k, auto v) {
            c.synthetic.deformation_frequency = parse_number<double>(k, v);
        };
        m["noise_std"] = [](RunConfig& c, auto k, auto v) { c.synthetic.noise_std = parse_number<double>(k, v); };
        m["alpha_grid"] = [](RunConfig& c, auto k, auto v) { c.alpha_grid = parse_list<double>(k, v); };
        m["beta_grid"] = [](RunConfig& c, auto k, auto v) { c.beta_grid = parse_list<double>(k, v); };
        m["T_grid"] = [](RunConfig& c, auto k, auto v) { c.T_grid = parse_list<std::size_t>(k, v); };
        m["stab_u"] = [](RunConfig& c, auto k, auto v) { c.stab_u = parse_number<double>(k, v); };
        m["stab_nodes"] = [](RunConfig& c, auto k, auto v) { c.stab_nodes = parse_number<std::size_t>(k, v); };
        m["T_list"] = [](RunConfig& c, auto k, auto v) { c.T_list = parse_list<std::size_t>(k, v); };
        m["seeds"] = [](RunConfig& c, auto k, auto v) { c.seeds = parse_list<std::uint64_t>(k, v); };
        return m;
    }();
    return table;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
    key = trim(key);
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) {
        std::string msg = "unknown config key '" + std::string(key) + "' (known:";
        for (const auto& k : known_keys()) msg += " " + k;
        throw ConfigError(msg + ")");
    }
    it->second(*this, key, value);
}

const std::vector<std::string>& RunConfig::known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, _] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

RunConfig parse_config(std::istream& is) {
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        try {
            cfg.set(s.substr(0, eq), s.substr(eq + 1));
        } catch (const std::exception& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config '" + path + "'");
    return parse_config(is);
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
    if (assignment.starts_with("--")) assignment.remove_prefix(2);
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw ConfigError("override '" + std::string(assignment) + "' must have the form key=value");
    cfg.set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void write_config(std::ostream& os, const RunConfig& c) {
    const auto& t = c.train;
    const auto& s = c.synthetic;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    os << "family = " << to_string(t.family) << '\n'
       << "K = " << t.order << '\n'
       << "P = " << t.hidden_dim << '\n'
       << "T_w = " << t.window << '\n'
       << "stride = " << t.stride << '\n'
       << "epochs = " << t.epochs << '\n'
       << "lr = " << num(t.adam.learning_rate) << '\n'
       << "lr_decay = " << num(t.adam.lr_decay_per_epoch) << '\n'
       << "adam_beta1 = " << num(t.adam.beta1) << '\n'
       << "adam_beta2 = " << num(t.adam.beta2) << '\n'
       << "adam_eps = " << num(t.adam.epsilon) << '\n'
       << "split = " << num(t.split) << '\n'
       << "activation = " << to_string(t.activation) << '\n'
       << "propagation = " << to_string(t.propagation) << '\n'
       << "lambda_reg = " << num(t.lambda_reg) << '\n'
       << "init_range = " << num(t.init_range) << '\n'
       << "init_alpha = " << num(t.init_alpha) << '\n'
       << "init_beta = " << num(t.init_beta) << '\n'
       << "seed = " << t.seed << '\n'
       << "graph_source = " << to_string(c.graph_source) << '\n'
       << "knn_k = " << s.knn_k << '\n'
       << "n_nodes = " << s.n_nodes << '\n'
       << "n_frames = " << s.n_frames << '\n'
       << "shape = " << to_string(s.base_shape) << '\n'
       << "rotation_rate = " << num(s.rotation_rate) << '\n'
       << "deformation_amplitude = " << num(s.deformation_amplitude) << '\n'
       << "deformation_frequency = " << num(s.deformation_frequency) << '\n'
       << "noise_std = " << num(s.noise_std) << '\n'
       << "alpha_grid = " << join(c.alpha_grid) << '\n'
       << "beta_grid = " << join(c.beta_grid) << '\n'
       << "T_grid = " << join(c.T_grid) << '\n'
       << "stab_u = " << num(c.stab_u) << '\n'
       << "stab_nodes = " << c.stab_nodes << '\n'
       << "T_list = " << join(c.T_list) << '\n';
    if (!c.seeds.empty()) os << "seeds = " << join(c.seeds) << '\n';
}

}  // namespace fgrnn
