#include "fgrnn/checkpoint.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "fgrnn/error.hpp"

namespace fgrnn {

namespace {

constexpr const char* kMagic = "fgrnn-checkpoint 1";

void put_array(std::ostream& os, const char* key, std::size_t rows, std::size_t cols, std::span<const double> v) {
    os << key << " = f64[" << rows << ',' << cols << ']';
    char buf[32];
    for (double x : v) {
        const int n = std::snprintf(buf, sizeof buf, "%.17g", x);
        os << ' ';
        os.write(buf, n);
    }
    os << '\n';
}

void put_scalar(std::ostream& os, const char* key, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << key << " = " << buf << '\n';
}

void put_filter(std::ostream& os, const char* key, const Filter& f) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ChebFilter>)
                put_array(os, key, 1, v.coeffs.size(), v.coeffs);
            else
                put_array(os, key, v.weights.rows(), v.weights.cols(), v.weights.values());
        },
        f);
}

struct Entry {
    std::string value;
    std::size_t line = 0;
};

struct Array {
    std::size_t rows = 0, cols = 0;
    std::vector<double> values;
};

class Fields {
public:
    Fields(std::map<std::string, Entry> m, std::size_t eof_line) : map_(std::move(m)), eof_line_(eof_line) {}

    bool has(const std::string& key) const { return map_.count(key) != 0; }

    const Entry& get(const std::string& key) const {
        const auto it = map_.find(key);
        if (it == map_.end()) throw ParseError("missing key '" + key + "'", eof_line_);
        return it->second;
    }

    std::string text(const std::string& key) const { return get(key).value; }

    template <typename T>
    T number(const std::string& key) const {
        const auto& e = get(key);
        T out{};
        const char* b = e.value.data();
        const char* end = b + e.value.size();
        auto [ptr, ec] = std::from_chars(b, end, out);
        if (ec != std::errc() || ptr != end) throw ParseError("invalid value for '" + key + "'", e.line);
        return out;
    }

    Array array(const std::string& key) const {
        const auto& e = get(key);
        Array a;
        const std::string& s = e.value;
        if (std::sscanf(s.c_str(), "f64[%zu,%zu]", &a.rows, &a.cols) != 2)
            throw ParseError("expected f64[rows,cols] array for '" + key + "'", e.line);
        const char* p = s.data() + s.find(']') + 1;
        const char* end = s.data() + s.size();
        const std::size_t count = a.rows * a.cols;
        a.values.reserve(count);
        while (p < end) {
            while (p < end && *p == ' ') ++p;
            if (p == end) break;
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(p, end, v);
            if (ec != std::errc()) throw ParseError("malformed number in '" + key + "'", e.line);
            a.values.push_back(v);
            p = ptr;
        }
        if (a.values.size() != count)
            throw ParseError("'" + key + "' declares " + std::to_string(count) + " values, found " +
                                 std::to_string(a.values.size()),
                             e.line);
        return a;
    }

private:
    std::map<std::string, Entry> map_;
    std::size_t eof_line_;
};

Filter read_filter(const Fields& f, const std::string& key, ConvFamily family) {
    Array a = f.array(key);
    switch (family) {
        case ConvFamily::chebyshev: return ChebFilter{std::move(a.values)};
        case ConvFamily::first_order: return FeatureTransform{DenseMatrix(a.rows, a.cols, std::move(a.values))};
        case ConvFamily::dense: return DenseTransform{DenseMatrix(a.rows, a.cols, std::move(a.values))};
    }
    throw ParseError("unknown family", 0);
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
    const auto& p = ck.params;
    p.validate();
    os << "# " << kMagic << '\n';
    os << "format = " << kMagic << '\n';
    os << "conv_family = " << to_string(p.family) << '\n';
    os << "activation = " << to_string(p.activation) << '\n';
    os << "propagation = " << to_string(p.propagation) << '\n';
    os << "n_nodes = " << p.n_nodes() << '\n';
    os << "n_features = " << p.n_features << '\n';
    if (p.family == ConvFamily::chebyshev)
        os << "K = " << std::get<ChebFilter>(p.input).order() << '\n';
    else
        os << "P = " << p.hidden_dim() << '\n';
    char hex[24];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(ck.graph_checksum));
    os << "graph_checksum = " << hex << '\n';
    os << "epochs_completed = " << ck.epochs_completed << '\n';
    put_filter(os, "W", p.input);
    put_filter(os, "U", p.recurrent);
    put_filter(os, "V", p.readout);
    put_scalar(os, "alpha", p.alpha);
    put_scalar(os, "beta", p.beta);
    put_array(os, "b", 1, p.bias.size(), p.bias);
    put_array(os, "z", 1, p.readout_bias.size(), p.readout_bias);
    if (ck.adam) {
        const auto& a = *ck.adam;
        os << "adam_step = " << a.step << '\n';
        put_scalar(os, "adam_beta1", a.beta1);
        put_scalar(os, "adam_beta2", a.beta2);
        put_scalar(os, "adam_eps", a.epsilon);
        put_scalar(os, "adam_lr", a.learning_rate);
        put_scalar(os, "adam_lr_decay", a.lr_decay_per_epoch);
        put_array(os, "adam_m", 1, a.first_moment.size(), a.first_moment);
        put_array(os, "adam_v", 1, a.second_moment.size(), a.second_moment);
    }
}

Checkpoint read_checkpoint(std::istream& is) {
    std::map<std::string, Entry> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
        std::string key = line.substr(first, eq - first);
        std::string value = line.substr(eq + 3);
        while (!value.empty() && (value.back() == '\r' || value.back() == ' ')) value.pop_back();
        if (raw.count(key)) throw ParseError("duplicate key '" + key + "'", line_no);
        raw[key] = {std::move(value), line_no};
    }
    if (raw.empty()) throw ParseError("empty checkpoint", 1);
    const Fields f(std::move(raw), line_no + 1);
    if (f.text("format") != kMagic) throw ParseError("not an fgrnn checkpoint", f.get("format").line);

    Checkpoint ck;
    auto& p = ck.params;
    auto parse_enum = [&](const std::string& key, auto parse) {
        try {
            return parse(f.text(key));
        } catch (const ConfigError& e) {
            throw ParseError(e.what(), f.get(key).line);
        }
    };
    p.family = parse_enum("conv_family", parse_conv_family);
    p.activation = parse_enum("activation", parse_activation);
    p.propagation = parse_enum("propagation", parse_first_order_operator);
    p.n_features = f.number<std::size_t>("n_features");
    const auto n_nodes = f.number<std::size_t>("n_nodes");
    {
        const auto& e = f.get("graph_checksum");
        auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), ck.graph_checksum, 16);
        if (ec != std::errc()) throw ParseError("invalid graph_checksum", e.line);
    }
    ck.epochs_completed = f.number<std::size_t>("epochs_completed");
    p.input = read_filter(f, "W", p.family);
    p.recurrent = read_filter(f, "U", p.family);
    p.readout = read_filter(f, "V", p.family);
    p.alpha = f.number<double>("alpha");
    p.beta = f.number<double>("beta");
    p.bias = f.array("b").values;
    p.readout_bias = f.array("z").values;
    if (p.bias.size() != n_nodes) throw ParseError("bias length differs from n_nodes", f.get("b").line);
    try {
        p.validate();
    } catch (const ContractError& e) {
        throw ParseError(e.what(), f.get("W").line);
    }
    if (f.has("adam_step")) {
        AdamState a;
        a.step = f.number<std::size_t>("adam_step");
        a.beta1 = f.number<double>("adam_beta1");
        a.beta2 = f.number<double>("adam_beta2");
        a.epsilon = f.number<double>("adam_eps");
        a.learning_rate = f.number<double>("adam_lr");
        a.lr_decay_per_epoch = f.number<double>("adam_lr_decay");
        a.first_moment = f.array("adam_m").values;
        a.second_moment = f.array("adam_v").values;
        if (a.first_moment.size() != scalar_count(p) || a.second_moment.size() != scalar_count(p))
            throw ParseError("optimizer moments do not match the parameter count", f.get("adam_m").line);
        ck.adam = std::move(a);
    }
    return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    write_checkpoint(os, ck);
    if (!os) throw IoError("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "'");
    return read_checkpoint(is);
}

}  // namespace fgrnn
