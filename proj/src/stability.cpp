#include "fgrnn/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>

#include "fgrnn/error.hpp"
#include "fgrnn/rng.hpp"
#include "fgrnn/spectral.hpp"

namespace fgrnn {

namespace {

constexpr std::size_t kSingularMaxIter = 200000;

void check_scalar_model(const ModelParams& p, const LaplacianSet& lap) {
    p.validate();
    require(p.family == ConvFamily::first_order, "stability: diagnostics need the first_order family");
    require(p.hidden_dim() == 1, "stability: diagnostics need hidden dimension P = 1 (scalar u)");
    require(lap.n_nodes() == p.n_nodes(), "stability: graph size differs from the model");
    require(p.n_nodes() <= kStabilityMaxNodes, "stability: limited to N <= 2048");
}

double recurrent_weight(const ModelParams& p) { return std::get<FeatureTransform>(p.recurrent).weights(0, 0); }

// Largest eigenvalue of M^T M for dense M, via y = M^T (M x).
double gram_lambda_max(const DenseMatrix& m, double shift) {
    const std::size_t n = m.cols();
    std::vector<double> tmp(m.rows());
    auto op = [&](std::span<const double> x, std::span<double> y) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            double s = 0.0;
            auto row = m.row(i);
            for (std::size_t j = 0; j < n; ++j) s += row[j] * x[j];
            tmp[i] = s;
        }
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t i = 0; i < m.rows(); ++i) {
            auto row = m.row(i);
            for (std::size_t j = 0; j < n; ++j) y[j] += row[j] * tmp[i];
        }
        if (shift != 0.0)
            for (std::size_t j = 0; j < n; ++j) y[j] = shift * x[j] - y[j];
    };
    const double scale = shift != 0.0 ? shift : 1.0;
    return power_iteration(n, op, 1e-15 * scale, kSingularMaxIter, 0x2545F4914F6CDD1DULL).value;
}

}  // namespace

std::vector<double> activation_slopes(const ModelParams& p, const LaplacianSet& lap, const DenseMatrix& h_prev,
                                      const DenseMatrix& x) {
    const CellStep s = fgrnn_step(p, lap, h_prev, x);
    std::vector<double> d(s.pre_activation.size());
    auto a = s.pre_activation.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = activate_derivative(p.activation, a[i]);
    return d;
}

DenseMatrix step_jacobian(const ModelParams& p, const LaplacianSet& lap, const DenseMatrix& h_prev,
                          const DenseMatrix& x) {
    check_scalar_model(p, lap);
    const auto d = activation_slopes(p, lap, h_prev, x);
    const double u = recurrent_weight(p);
    DenseMatrix j = lap.propagation(p.propagation).to_dense();
    for (std::size_t i = 0; i < j.rows(); ++i)
        for (double& v : j.row(i)) v *= p.alpha * u * d[i];
    for (std::size_t i = 0; i < j.rows(); ++i) j(i, i) += p.beta;
    return j;
}

DenseMatrix jacobian_product_matrix(const ModelParams& p, const LaplacianSet& lap,
                                    std::span<const DenseMatrix> window, std::size_t T,
                                    std::vector<std::vector<double>>* slopes) {
    check_scalar_model(p, lap);
    require(T >= 2, "jacobian_product: T must be at least 2");
    require(window.size() + 1 >= T, "jacobian_product: window needs at least T-1 frames");
    const SparseMatrix& op = lap.propagation(p.propagation);
    const double u = recurrent_weight(p);
    const std::size_t n = p.n_nodes();

    DenseMatrix prod = DenseMatrix::identity(n);
    DenseMatrix h = zero_hidden(p);
    for (std::size_t t = 1; t <= T - 1; ++t) {
        const CellStep s = fgrnn_step(p, lap, h, window[t - 1], t);
        if (t >= 2) {
            std::vector<double> d(n);
            for (std::size_t i = 0; i < n; ++i) d[i] = activate_derivative(p.activation, s.pre_activation(i, 0));
            // J_t P = alpha u D (S P) + beta P
            DenseMatrix next = spmm(op, prod);
            for (std::size_t i = 0; i < n; ++i)
                for (double& v : next.row(i)) v *= p.alpha * u * d[i];
            next.axpy(p.beta, prod);
            prod = std::move(next);
            if (slopes) slopes->push_back(std::move(d));
        }
        h = s.h;
    }
    return prod;
}

SingularRange extreme_singular_values(const DenseMatrix& m) {
    SingularRange r;
    const double top = std::max(gram_lambda_max(m, 0.0), 0.0);
    r.sigma_max = std::sqrt(top);
    if (top == 0.0) return r;
    // lambda_min(M^T M) = top - lambda_max(top I - M^T M)
    const double gap = gram_lambda_max(m, top);
    r.sigma_min = std::sqrt(std::max(top - gap, 0.0));
    return r;
}

StabilityReport jacobian_product(const ModelParams& p, const LaplacianSet& lap, std::span<const DenseMatrix> window,
                                 std::size_t T) {
    StabilityReport rep;
    rep.alpha = p.alpha;
    rep.beta = p.beta;
    rep.T = T;
    const DenseMatrix prod = jacobian_product_matrix(p, lap, window, T, &rep.slopes);

    const SparseMatrix& op = lap.propagation(p.propagation);
    const double u = recurrent_weight(p);
    for (const auto& d : rep.slopes) {
        DenseMatrix j = op.to_dense();
        for (std::size_t i = 0; i < j.rows(); ++i)
            for (double& v : j.row(i)) v *= p.alpha * u * d[i];
        for (std::size_t i = 0; i < j.rows(); ++i) j(i, i) += p.beta;
        rep.per_step_jacobian_norm.push_back(std::sqrt(std::max(gram_lambda_max(j, 0.0), 0.0)));
    }

    const auto sv = extreme_singular_values(prod);
    rep.sigma_max = sv.sigma_max;
    rep.sigma_min = sv.sigma_min;
    if (sv.sigma_min > 0.0) rep.condition_number = sv.sigma_max / sv.sigma_min;
    rep.bound_M = condition_bound(p, rep.slopes, lap, T);
    return rep;
}

std::optional<double> condition_bound(const ModelParams& p, std::span<const std::vector<double>> slopes,
                                      const LaplacianSet& lap, std::size_t T) {
    check_scalar_model(p, lap);
    require(T >= 2, "condition_bound: T must be at least 2");
    if (p.beta == 0.0) return std::nullopt;
    const SparseMatrix& op = lap.propagation(p.propagation);
    const double u = recurrent_weight(p);
    const auto offsets = op.row_offsets();
    const auto vals = op.values();
    std::vector<double> row_sq(op.rows(), 0.0);
    for (std::size_t i = 0; i < op.rows(); ++i)
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) row_sq[i] += vals[k] * vals[k];
    double worst = 0.0;
    for (const auto& d : slopes) {
        require(d.size() == op.rows(), "condition_bound: slope vector has the wrong length");
        double fro2 = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) fro2 += d[i] * d[i] * row_sq[i];
        worst = std::max(worst, u * u * fro2);
    }
    const double r = std::abs(p.alpha / p.beta) * worst;
    if (!(r < 1.0)) return std::nullopt;
    const double e = static_cast<double>(T - 2);
    return std::pow(1.0 + r, e) / std::pow(1.0 - r, e);
}

std::vector<DenseMatrix> stability_window(std::size_t n_nodes, std::size_t n_features, std::size_t frames,
                                          std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<DenseMatrix> w;
    w.reserve(frames);
    for (std::size_t t = 0; t < frames; ++t) {
        DenseMatrix f(n_nodes, n_features);
        for (double& v : f.values()) v = rng.uniform(-1.0, 1.0);
        w.push_back(std::move(f));
    }
    return w;
}

std::vector<StabilityReport> stability_sweep(const Graph& g, const ModelParams& base, std::vector<double> alpha_grid,
                                             std::vector<double> beta_grid, std::vector<std::size_t> T_grid,
                                             std::uint64_t seed) {
    require(!alpha_grid.empty() && !beta_grid.empty() && !T_grid.empty(), "stability_sweep: grids must be non-empty");
    std::sort(alpha_grid.begin(), alpha_grid.end());
    std::sort(beta_grid.begin(), beta_grid.end());
    std::sort(T_grid.begin(), T_grid.end());
    require(T_grid.front() >= 2, "stability_sweep: every T must be at least 2");

    const LaplacianSet lap = build_laplacians(g);
    check_scalar_model(base, lap);
    const auto window = stability_window(base.n_nodes(), base.n_features, T_grid.back(), seed);

    struct Point {
        double alpha, beta;
        std::size_t T;
    };
    std::vector<Point> points;
    for (double a : alpha_grid)
        for (double b : beta_grid)
            for (std::size_t t : T_grid) points.push_back({a, b, t});

    std::vector<StabilityReport> rows(points.size());
    std::exception_ptr failure;
    const auto count = static_cast<long long>(points.size());
#pragma omp parallel for schedule(dynamic)
    for (long long k = 0; k < count; ++k) {
        try {
            ModelParams p = base;
            p.alpha = points[static_cast<std::size_t>(k)].alpha;
            p.beta = points[static_cast<std::size_t>(k)].beta;
            rows[static_cast<std::size_t>(k)] = jacobian_product(p, lap, window, points[static_cast<std::size_t>(k)].T);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return rows;
}

void write_sweep_csv(std::ostream& os, std::span<const StabilityReport> rows) {
    os << "alpha,beta,T,sigma_max,sigma_min,cond,bound_M\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu,%.17g,%.17g,", r.alpha, r.beta, r.T, r.sigma_max, r.sigma_min);
        os << buf;
        if (r.condition_number) {
            std::snprintf(buf, sizeof buf, "%.17g", *r.condition_number);
            os << buf;
        } else {
            os << "inf";
        }
        os << ',';
        if (r.bound_M) {
            std::snprintf(buf, sizeof buf, "%.17g", *r.bound_M);
            os << buf;
        } else {
            os << "undefined";
        }
        os << '\n';
    }
}

}  // namespace fgrnn
