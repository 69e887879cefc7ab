#pragma once

// Entropic regularized optimal transport. Sinkhorn scaling runs in the log
// domain so that small regularization (eps down to 1e-3) never underflows the
// Gibbs kernel. Two entry points:
//   sinkhorn()          - solver with convergence test and eps annealing
//   sinkhorn_unrolled() - fixed iteration count plus the per-iteration
//                         softmax traces needed for an exact backward pass
//                         through the unrolled updates.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "otfuse/matrix.hpp"

namespace otfuse {

struct Coupling {
    Matrix plan;               // P, n x n', strictly positive when from sinkhorn
    std::vector<double> a;     // source marginal
    std::vector<double> b;     // target marginal
    double eps = 0.0;          // regularization used (0 for the exact oracle)
    std::size_t iterations_used = 0;
    bool converged = false;
    double row_residual = 0.0;  // max_i |(P 1)_i - a_i|
    double col_residual = 0.0;  // max_j |(P^T 1)_j - b_j|
};

namespace detail {

inline void check_marginal(const std::vector<double>& m, std::size_t expect,
                           const char* name) {
    if (m.size() != expect) {
        throw std::invalid_argument(std::string("sinkhorn: marginal ") + name +
                                    " length does not match cost matrix");
    }
    double sum = 0.0;
    for (double v : m) {
        if (!(v > 0.0)) {
            throw std::invalid_argument(std::string("sinkhorn: marginal ") + name +
                                        " must be strictly positive");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument(std::string("sinkhorn: marginal ") + name +
                                    " must sum to 1 within 1e-9");
    }
}

// One pass over a row block: log-sum-exp and, optionally, the softmax row.
inline double logsumexp_row(const double* vals, std::size_t n, double* softmax_out) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, vals[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double e = std::exp(vals[j] - mx);
        if (softmax_out) softmax_out[j] = e;
        sum += e;
    }
    if (softmax_out) {
        for (std::size_t j = 0; j < n; ++j) softmax_out[j] /= sum;
    }
    return mx + std::log(sum);
}

struct LogDomainState {
    std::vector<double> f, g, log_a, log_b;
    std::vector<double> scratch;

    LogDomainState(const std::vector<double>& a, const std::vector<double>& b)
        : f(a.size(), 0.0), g(b.size(), 0.0), log_a(a.size()), log_b(b.size()),
          scratch(std::max(a.size(), b.size())) {
        for (std::size_t i = 0; i < a.size(); ++i) log_a[i] = std::log(a[i]);
        for (std::size_t j = 0; j < b.size(); ++j) log_b[j] = std::log(b[j]);
    }
};

// f_i <- eps * (log a_i - LSE_j((g_j - C_ij)/eps)); returns the row-marginal
// residual of the iterate *before* the update. softmax_rows, when non-null,
// receives the row softmax matrix used by the update (needed for backward).
inline double f_update(const Matrix& cost, double eps, LogDomainState& s,
                       const std::vector<double>& a, Matrix* softmax_rows) {
    const std::size_t n = cost.rows(), m = cost.cols();
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* crow = cost.data() + i * m;
        double* buf = s.scratch.data();
        for (std::size_t j = 0; j < m; ++j) buf[j] = (s.g[j] - crow[j]) / eps;
        double* smrow = softmax_rows ? softmax_rows->data() + i * m : nullptr;
        const double lse = logsumexp_row(buf, m, smrow);
        const double f_new = eps * (s.log_a[i] - lse);
        const double ratio = std::exp(std::min((s.f[i] - f_new) / eps, 30.0));
        residual = std::max(residual, a[i] * std::abs(ratio - 1.0));
        s.f[i] = f_new;
    }
    return residual;
}

// Same for g, iterating the transposed cost for locality.
inline double g_update(const Matrix& cost_t, double eps, LogDomainState& s,
                       const std::vector<double>& b, Matrix* softmax_cols_t) {
    const std::size_t m = cost_t.rows(), n = cost_t.cols();
    double residual = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double* crow = cost_t.data() + j * n;
        double* buf = s.scratch.data();
        for (std::size_t i = 0; i < n; ++i) buf[i] = (s.f[i] - crow[i]) / eps;
        double* smrow = softmax_cols_t ? softmax_cols_t->data() + j * n : nullptr;
        const double lse = logsumexp_row(buf, n, smrow);
        const double g_new = eps * (s.log_b[j] - lse);
        const double ratio = std::exp(std::min((s.g[j] - g_new) / eps, 30.0));
        residual = std::max(residual, b[j] * std::abs(ratio - 1.0));
        s.g[j] = g_new;
    }
    return residual;
}

inline Matrix recover_plan(const Matrix& cost, double eps, const LogDomainState& s) {
    const std::size_t n = cost.rows(), m = cost.cols();
    Matrix plan(n, m);
    // Floor at the smallest normal double: keeps the plan strictly positive
    // even where the exponent underflows.
    const double floor = std::numeric_limits<double>::min();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            plan(i, j) = std::max(std::exp((s.f[i] + s.g[j] - cost(i, j)) / eps), floor);
        }
    }
    return plan;
}

inline void measure_residuals(const Matrix& plan, const std::vector<double>& a,
                              const std::vector<double>& b, double& row_res,
                              double& col_res) {
    row_res = col_res = 0.0;
    std::vector<double> colsum(plan.cols(), 0.0);
    for (std::size_t i = 0; i < plan.rows(); ++i) {
        double rs = 0.0;
        for (std::size_t j = 0; j < plan.cols(); ++j) {
            rs += plan(i, j);
            colsum[j] += plan(i, j);
        }
        row_res = std::max(row_res, std::abs(rs - a[i]));
    }
    for (std::size_t j = 0; j < plan.cols(); ++j) {
        col_res = std::max(col_res, std::abs(colsum[j] - b[j]));
    }
}

}  // namespace detail

// Entropic OT solver. Alternates log-domain scaling updates until both
// marginal residuals fall below tol or max_iter is reached. For small eps the
// potentials are warm-started by an eps-halving anneal, which keeps the
// iteration count practical at eps = 1e-3.
inline Coupling sinkhorn(const Matrix& cost, const std::vector<double>& a,
                         const std::vector<double>& b, double eps,
                         std::size_t max_iter = 100, double tol = 1e-6) {
    if (!(eps > 0.0)) {
        throw std::invalid_argument("sinkhorn: eps must be > 0");
    }
    require_finite(cost, "sinkhorn cost");
    detail::check_marginal(a, cost.rows(), "a");
    detail::check_marginal(b, cost.cols(), "b");

    detail::LogDomainState state(a, b);
    const Matrix cost_t = transpose(cost);

    constexpr double kAnnealThreshold = 0.05;
    if (eps < kAnnealThreshold) {
        double cur = 0.5;
        while (cur > eps) {
            for (int it = 0; it < 8; ++it) {
                detail::f_update(cost, cur, state, a, nullptr);
                detail::g_update(cost_t, cur, state, b, nullptr);
            }
            cur = std::max(eps, cur * 0.5);
        }
    }

    Coupling result;
    result.a = a;
    result.b = b;
    result.eps = eps;
    std::size_t used = 0;
    bool converged = false;
    for (std::size_t it = 0; it < max_iter; ++it) {
        const double row_res = detail::f_update(cost, eps, state, a, nullptr);
        detail::g_update(cost_t, eps, state, b, nullptr);
        ++used;
        // After a g-update columns are satisfied by construction; row_res is
        // the row residual of the previous iterate, so one extra sweep runs
        // after the residual first dips under tol.
        if (row_res <= tol && it > 0) {
            converged = true;
            break;
        }
    }
    result.plan = detail::recover_plan(cost, eps, state);
    detail::measure_residuals(result.plan, a, b, result.row_residual,
                              result.col_residual);
    result.iterations_used = used;
    result.converged = result.row_residual <= tol && result.col_residual <= tol;
    (void)converged;
    return result;
}

// Fixed-iteration Sinkhorn whose exact computation graph can be replayed
// backwards. Stores the row/column softmax matrices of every update.
struct SinkhornPlan {
    Matrix plan;                        // P after `iterations` full updates
    double eps = 0.0;
    std::size_t iterations = 0;
    std::vector<Matrix> row_softmax;    // S_t, n x n'
    std::vector<Matrix> col_softmax_t;  // T_t stored transposed, n' x n
};

inline SinkhornPlan sinkhorn_unrolled(const Matrix& cost, const std::vector<double>& a,
                                      const std::vector<double>& b, double eps,
                                      std::size_t iterations) {
    if (!(eps > 0.0)) {
        throw std::invalid_argument("sinkhorn_unrolled: eps must be > 0");
    }
    if (iterations == 0) {
        throw std::invalid_argument("sinkhorn_unrolled: need at least one iteration");
    }
    require_finite(cost, "sinkhorn cost");
    detail::check_marginal(a, cost.rows(), "a");
    detail::check_marginal(b, cost.cols(), "b");

    detail::LogDomainState state(a, b);
    const Matrix cost_t = transpose(cost);

    SinkhornPlan out;
    out.eps = eps;
    out.iterations = iterations;
    out.row_softmax.reserve(iterations);
    out.col_softmax_t.reserve(iterations);
    for (std::size_t t = 0; t < iterations; ++t) {
        Matrix s(cost.rows(), cost.cols());
        detail::f_update(cost, eps, state, a, &s);
        out.row_softmax.push_back(std::move(s));
        Matrix ct(cost.cols(), cost.rows());
        detail::g_update(cost_t, eps, state, b, &ct);
        out.col_softmax_t.push_back(std::move(ct));
    }
    out.plan = detail::recover_plan(cost, eps, state);
    return out;
}

// Reverse pass through the unrolled updates: given dL/dP, returns dL/dC.
inline Matrix sinkhorn_unrolled_backward(const SinkhornPlan& trace, const Matrix& d_plan) {
    const Matrix& plan = trace.plan;
    if (!d_plan.same_shape(plan)) {
        throw std::invalid_argument("sinkhorn_unrolled_backward: gradient shape mismatch");
    }
    const std::size_t n = plan.rows(), m = plan.cols();
    const double inv_eps = 1.0 / trace.eps;

    Matrix d_cost(n, m);
    std::vector<double> df(n, 0.0), dg(m, 0.0);
    // P_ij = exp((f_i + g_j - C_ij)/eps)
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double w = d_plan(i, j) * plan(i, j) * inv_eps;
            df[i] += w;
            dg[j] += w;
            d_cost(i, j) -= w;
        }
    }
    for (std::size_t t = trace.iterations; t-- > 0;) {
        // g_t = eps(log b - LSE_i((f_t_i - C_ij)/eps)); T stored transposed.
        const Matrix& col_t = trace.col_softmax_t[t];
        for (std::size_t j = 0; j < m; ++j) {
            const double dgj = dg[j];
            if (dgj == 0.0) continue;
            const double* trow = col_t.data() + j * n;
            for (std::size_t i = 0; i < n; ++i) {
                df[i] -= dgj * trow[i];
                d_cost(i, j) += dgj * trow[i];
            }
        }
        // f_t = eps(log a - LSE_j((g_{t-1}_j - C_ij)/eps))
        const Matrix& row_s = trace.row_softmax[t];
        std::fill(dg.begin(), dg.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double dfi = df[i];
            if (dfi == 0.0) continue;
            const double* srow = row_s.data() + i * m;
            double* crow = d_cost.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) {
                dg[j] -= dfi * srow[j];
                crow[j] += dfi * srow[j];
            }
        }
        std::fill(df.begin(), df.end(), 0.0);
        // dg now addresses g_{t-1}; at t = 0 it addresses the zero
        // initialization and is discarded.
    }
    return d_cost;
}

// Brute-force OT for uniform marginals: enumerates all n! permutations and
// returns the cheapest permutation coupling (entries 1/n). Ties break toward
// the lexicographically smallest permutation.
inline std::pair<Coupling, double> exact_ot_uniform(const Matrix& cost) {
    if (cost.rows() != cost.cols()) {
        throw std::invalid_argument("exact_ot_uniform: cost must be square");
    }
    const std::size_t n = cost.rows();
    if (n == 0 || n > 8) {
        throw std::invalid_argument("exact_ot_uniform: n must be in [1, 8]");
    }
    require_finite(cost, "exact_ot_uniform cost");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> best = perm;
    double best_sum = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += cost(i, perm[i]);
        if (s < best_sum) {
            best_sum = s;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    Coupling c;
    c.plan = Matrix(n, n);
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) c.plan(i, best[i]) = w;
    c.a.assign(n, w);
    c.b.assign(n, w);
    c.eps = 0.0;
    c.converged = true;
    return {std::move(c), best_sum / static_cast<double>(n)};
}

// H(P) = -sum_ij P_ij (log P_ij - 1), with 0 log 0 := 0.
inline double entropy(const Matrix& plan) {
    double h = 0.0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const double p = plan.data()[i];
        if (p < 0.0) {
            throw std::invalid_argument("entropy: negative plan entry");
        }
        if (p > 0.0) h -= p * (std::log(p) - 1.0);
    }
    return h;
}

inline double entropy(const Coupling& coupling) { return entropy(coupling.plan); }

inline double transport_cost(const Matrix& cost, const Matrix& plan) {
    if (!cost.same_shape(plan)) {
        throw std::invalid_argument("transport_cost: shape mismatch " + cost.shape_string() +
                                    " vs " + plan.shape_string());
    }
    return frobenius_dot(cost, plan);
}

inline double transport_cost(const Matrix& cost, const Coupling& coupling) {
    return transport_cost(cost, coupling.plan);
}

// Barycentric projection: row i of the result is (1/a_i) sum_j P_ij target_j.
inline Matrix barycentric_map(const Matrix& plan, const std::vector<double>& a,
                              const Matrix& target) {
    if (plan.cols() != target.rows() || plan.rows() != a.size()) {
        throw std::invalid_argument("barycentric_map: shape mismatch");
    }
    for (double v : a) {
        if (v == 0.0) {
            throw std::invalid_argument("barycentric_map: zero source marginal entry");
        }
    }
    Matrix out = matmul(plan, target);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        const double inv = 1.0 / a[i];
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= inv;
    }
    return out;
}

inline Matrix barycentric_map(const Coupling& coupling, const Matrix& target) {
    return barycentric_map(coupling.plan, coupling.a, target);
}

// Backward of barycentric_map in its two differentiable arguments.
inline void barycentric_map_backward(const Matrix& plan, const std::vector<double>& a,
                                     const Matrix& target, const Matrix& d_out,
                                     Matrix& d_plan, Matrix& d_target) {
    d_plan = Matrix(plan.rows(), plan.cols());
    d_target = Matrix(target.rows(), target.cols());
    for (std::size_t i = 0; i < plan.rows(); ++i) {
        const double inv = 1.0 / a[i];
        for (std::size_t j = 0; j < plan.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < target.cols(); ++c) {
                acc += d_out(i, c) * target(j, c);
                d_target(j, c) += inv * plan(i, j) * d_out(i, c);
            }
            d_plan(i, j) = inv * acc;
        }
    }
}

}  // namespace otfuse
