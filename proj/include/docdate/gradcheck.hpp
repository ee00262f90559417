#pragma once

#include <functional>
#include <string>
#include <vector>

#include "docdate/tensor.hpp"

namespace docdate {

// Named handle to a mutable parameter tensor probed by the checker.
struct ParamView {
    std::string name;
    Tensor* tensor = nullptr;
};

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    std::int64_t worst_index = -1;
    double analytic = 0.0;  // at worst_index
    double numeric = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_err() const;
    bool pass(double tol) const { return max_rel_err() < tol; }
    // One line per parameter: "param=<name> max_rel_err=<v> ..."
    std::string to_lines() const;
};

// Evaluates the scalar loss from the current parameter values. When `grads`
// is non-null it has one slot per parameter and must be filled with
// d loss / d param (zeros when unreachable). Must be deterministic: the
// checker evaluates twice and rejects bit-level mismatches.
using ForwardFn = std::function<double(std::vector<Tensor>* grads)>;

// Central finite differences with step h against the closure's own analytic
// gradients. Relative error denominator: max(|analytic|, |numeric|, 1e-8).
GradCheckReport grad_check(const std::vector<ParamView>& params, const ForwardFn& forward, double h = 1e-5);

}  // namespace docdate
