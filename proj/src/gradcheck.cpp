#include "docdate/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace docdate {

double GradCheckReport::max_rel_err() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.max_rel_err);
    return m;
}

std::string GradCheckReport::to_lines() const {
    std::string out;
    char buf[256];
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof(buf), "param=%s max_rel_err=%.3e worst_index=%lld analytic=%.17g numeric=%.17g\n",
                      e.name.c_str(), e.max_rel_err, static_cast<long long>(e.worst_index), e.analytic, e.numeric);
        out += buf;
    }
    return out;
}

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

GradCheckReport grad_check(const std::vector<ParamView>& params, const ForwardFn& forward, double h) {
    std::vector<Tensor> analytic(params.size());
    const double l0 = forward(&analytic);
    {
        std::vector<Tensor> again(params.size());
        const double l1 = forward(&again);
        if (!same_bits(l0, l1))
            throw ValueError("grad_check: forward is not deterministic (loss bits differ across evaluations)");
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (!analytic[i].same_shape(again[i]))
                throw ValueError("grad_check: gradient shape for " + params[i].name + " varies across evaluations");
            for (std::int64_t e = 0; e < analytic[i].size(); ++e)
                if (!same_bits(analytic[i][e], again[i][e]))
                    throw ValueError("grad_check: gradient of " + params[i].name +
                                     " is not deterministic across evaluations");
        }
    }

    GradCheckReport report;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i].tensor;
        if (!analytic[i].same_shape(p) && analytic[i].size() != p.size())
            throw DimensionError("grad_check: analytic gradient for " + params[i].name + " has shape " +
                                 shape_str(analytic[i].shape()) + ", parameter has " + shape_str(p.shape()));
        GradCheckEntry entry;
        entry.name = params[i].name;
        for (std::int64_t e = 0; e < p.size(); ++e) {
            const double orig = p[e];
            p[e] = orig + h;
            const double lp = forward(nullptr);
            p[e] = orig - h;
            const double lm = forward(nullptr);
            p[e] = orig;
            const double num = (lp - lm) / (2.0 * h);
            const double ana = analytic[i][e];
            const double denom = std::max({std::fabs(ana), std::fabs(num), 1e-8});
            const double rel = std::fabs(ana - num) / denom;
            if (rel >= entry.max_rel_err) {
                entry.max_rel_err = rel;
                entry.worst_index = e;
                entry.analytic = ana;
                entry.numeric = num;
            }
        }
        if (p.size() == 0) entry.worst_index = -1;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace docdate
