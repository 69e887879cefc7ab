#pragma once

// Central-difference gradient checking for hand-written backward passes.
// The caller computes analytic gradients first; the checker perturbs every
// coordinate of every registered parameter and compares.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "otfuse/matrix.hpp"

namespace otfuse {

struct ParamView {
    std::string name;
    Matrix* value = nullptr;         // mutated in place while probing, restored after
    const Matrix* gradient = nullptr;  // analytic gradient, same shape
};

struct GradCheckReport {
    struct Entry {
        std::string name;
        double max_rel_error = 0.0;
        std::size_t worst_index = 0;
    };

    std::vector<Entry> per_param;
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string worst_param;
    std::size_t worst_index = 0;
    std::string failure;  // non-empty when a probe produced a non-finite value
};

// Compares analytic gradients against (f(p+h) - f(p-h)) / 2h per coordinate.
// Relative error uses denominator max(|analytic|, |numeric|, 1e-8).
inline GradCheckReport grad_check(const std::function<double()>& f,
                                  std::vector<ParamView> params, double h, double tol) {
    if (!(h >= 1e-7 && h <= 1e-3)) {
        throw std::invalid_argument("grad_check: step h must lie in [1e-7, 1e-3]");
    }
    GradCheckReport report;
    report.tolerance = tol;
    for (auto& pv : params) {
        if (pv.value == nullptr || pv.gradient == nullptr ||
            !pv.value->same_shape(*pv.gradient)) {
            throw std::invalid_argument("grad_check: bad parameter view for " + pv.name);
        }
        GradCheckReport::Entry entry;
        entry.name = pv.name;
        for (std::size_t idx = 0; idx < pv.value->size(); ++idx) {
            double& slot = pv.value->data()[idx];
            const double saved = slot;
            slot = saved + h;
            const double fp = f();
            slot = saved - h;
            const double fm = f();
            slot = saved;
            if (!std::isfinite(fp) || !std::isfinite(fm)) {
                report.failure = "non-finite value at " + pv.name + "[" +
                                 std::to_string(idx) + "]";
                report.pass = false;
                report.worst_param = pv.name;
                report.worst_index = idx;
                report.per_param.push_back(entry);
                return report;
            }
            const double numeric = (fp - fm) / (2.0 * h);
            const double analytic = pv.gradient->data()[idx];
            const double denom =
                std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            const double rel = std::abs(analytic - numeric) / denom;
            if (rel > entry.max_rel_error) {
                entry.max_rel_error = rel;
                entry.worst_index = idx;
            }
        }
        if (entry.max_rel_error > report.max_rel_error) {
            report.max_rel_error = entry.max_rel_error;
            report.worst_param = entry.name;
            report.worst_index = entry.worst_index;
        }
        report.per_param.push_back(std::move(entry));
    }
    report.pass = report.max_rel_error <= tol;
    return report;
}

}  // namespace otfuse
