#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "fgrnn/checkpoint.hpp"
#include "fgrnn/config.hpp"
#include "fgrnn/error.hpp"
#include "helpers.hpp"

using namespace fgrnn;

TEST_CASE("config parsing and overrides") {
    std::istringstream in(
        "# experiment\n"
        "family = first_order\n"
        "P = 4\n"
        "T_w = 7   # truncation\n"
        "lr = 0.005\n"
        "\n"
        "alpha_grid = 0, 0.5, 1\n"
        "seeds = 1,2,3\n"
        "shape = ring\n");
    RunConfig c = parse_config(in);
    CHECK(c.train.family == ConvFamily::first_order);
    CHECK(c.train.hidden_dim == 4);
    CHECK(c.train.window == 7);
    CHECK(c.train.adam.learning_rate == 0.005);
    CHECK(c.alpha_grid == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(c.synthetic.base_shape == BaseShape::ring);

    apply_override(c, "--T_w=12");
    apply_override(c, "seed=9");
    CHECK(c.train.window == 12);
    CHECK(c.train.seed == 9);
    CHECK(c.synthetic.seed == 9);
}

TEST_CASE("config errors") {
    RunConfig c;
    CHECK_THROWS_AS(apply_override(c, "--bogus=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "--K=three"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "--K"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "--alpha_grid=0,x"), ConfigError);
    try {
        apply_override(c, "--shape=sphere");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("cylinder") != std::string::npos);
    }
    std::istringstream in("family = chebyshev\nno equals sign\n");
    CHECK_THROWS_AS(parse_config(in), ConfigError);
}

TEST_CASE("config round trip") {
    RunConfig c;
    apply_override(c, "--family=first_order");
    apply_override(c, "--lr=0.0123456789012345");
    apply_override(c, "--beta_grid=0.1,0.9");
    apply_override(c, "--T_list=3,6");
    std::stringstream ss;
    write_config(ss, c);
    const RunConfig back = parse_config(ss);
    std::stringstream again;
    write_config(again, back);
    CHECK(again.str() == ss.str());
    CHECK(back.train.adam.learning_rate == c.train.adam.learning_rate);
    for (const auto& k : RunConfig::known_keys())
        if (k != "seeds") CHECK(ss.str().find(k + " = ") != std::string::npos);  // empty list is omitted
}

TEST_CASE("checkpoint round trip is exact") {
    for (ConvFamily fam : {ConvFamily::chebyshev, ConvFamily::first_order, ConvFamily::dense}) {
        InitOptions opt;
        opt.order = 4;
        opt.hidden_dim = 2;
        opt.activation = Activation::relu;
        opt.propagation = FirstOrderOperator::laplacian;
        Checkpoint ck;
        ck.params = init_params(fam, 6, 3, opt, 17);
        ck.params.alpha = 0.1 + 1e-17;
        ck.params.readout_bias[2] = -1.0 / 3.0;
        ck.graph_checksum = 0xDEADBEEF01234567ULL;
        ck.epochs_completed = 4;
        AdamState st = AdamState::for_params(ck.params, AdamConfig{});
        st.step = 12;
        st.first_moment[0] = 1e-300;
        st.second_moment.back() = 3.14159;
        st.learning_rate = 0.0059049;
        ck.adam = st;

        std::stringstream ss;
        write_checkpoint(ss, ck);
        const Checkpoint back = read_checkpoint(ss);
        CHECK(back.params == ck.params);
        CHECK(back.graph_checksum == ck.graph_checksum);
        CHECK(back.epochs_completed == 4);
        REQUIRE(back.adam);
        CHECK(back.adam->first_moment == st.first_moment);
        CHECK(back.adam->second_moment == st.second_moment);
        CHECK(back.adam->step == 12);
        CHECK(back.adam->learning_rate == st.learning_rate);
    }
}

TEST_CASE("malformed checkpoints are rejected") {
    InitOptions opt;
    Checkpoint ck;
    ck.params = init_params(ConvFamily::chebyshev, 5, 3, opt, 1);
    std::stringstream ss;
    write_checkpoint(ss, ck);
    const std::string good = ss.str();

    auto broken = [&](const std::string& from, const std::string& to) {
        std::string s = good;
        const auto pos = s.find(from);
        REQUIRE(pos != std::string::npos);
        return s.replace(pos, from.size(), to);
    };
    for (auto [from, to] : std::vector<std::pair<std::string, std::string>>{
             {"format = fgrnn-checkpoint 1", "format = fgrnn-checkpoint 9"},
             {"conv_family = chebyshev", "conv_family = lstm"},
             {"n_nodes = 5", "n_nodes = 6"},
             {"f64[1,3]", "f64[1,4]"}}) {
        std::istringstream in(broken(from, to));
        CHECK_THROWS(read_checkpoint(in));
    }
    std::istringstream empty("");
    CHECK_THROWS(read_checkpoint(empty));

    std::istringstream bad_family(broken("conv_family = chebyshev", "conv_family = lstm"));
    try {
        read_checkpoint(bad_family);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}
