#pragma once

// Independent reference implementations. They share no code with the library beyond the
// plain data types, and favour directness over speed.

#include "custemb/classify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace custemb::oracle {

inline double f1(double precision, double recall) {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

struct Counts {
    long tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Counts count(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> pred) {
    Counts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] && pred[i]) ++c.tp;
        else if (!truth[i] && pred[i]) ++c.fp;
        else if (truth[i] && !pred[i]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

/// (precision, recall, f1) straight from the counts.
inline std::array<double, 3> prf(const Counts& c) {
    const double p = c.tp + c.fp == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fp);
    const double r = c.tp + c.fn == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fn);
    return {p, r, f1(p, r)};
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double decrease = 0.0;  // parent Gini minus weighted child Gini, per row
};

/// Exhaustive CART split: every feature, every midpoint between consecutive distinct
/// values. Decreases within `tie` of the best count as ties and resolve to the lower
/// feature, then the lower threshold.
inline SplitChoice best_split(MatrixView x, std::span<const std::uint8_t> labels, const std::vector<std::size_t>& rows,
                              std::size_t min_leaf, double tie = 1e-9) {
    auto gini = [](double pos, double n) {
        if (n == 0) return 0.0;
        const double p = pos / n;
        return 2.0 * p * (1.0 - p);
    };
    double total_pos = 0;
    for (auto r : rows) total_pos += labels[r];
    const double n = static_cast<double>(rows.size());
    const double parent = gini(total_pos, n);
    SplitChoice best;
    for (std::size_t f = 0; f < x.cols; ++f) {
        std::vector<double> values;
        for (auto r : rows) values.push_back(x.row(r)[f]);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t k = 0; k + 1 < values.size(); ++k) {
            double thr = (values[k] + values[k + 1]) / 2.0;
            if (thr >= values[k + 1]) thr = values[k];
            double nl = 0, pl = 0;
            for (auto r : rows)
                if (x.row(r)[f] <= thr) {
                    ++nl;
                    pl += labels[r];
                }
            const double nr = n - nl;
            if (nl < double(min_leaf) || nr < double(min_leaf)) continue;
            const double dec = parent - (nl / n) * gini(pl, nl) - (nr / n) * gini(total_pos - pl, nr);
            if (dec <= 1e-12) continue;
            if (!best.found || dec > best.decrease + tie) best = {true, static_cast<int>(f), thr, dec};
        }
    }
    return best;
}

/// Central difference of f along each coordinate of x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double eps) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + eps;
        const double up = f(x);
        x[i] = saved - eps;
        const double down = f(x);
        x[i] = saved;
        g[i] = (up - down) / (2.0 * eps);
    }
    return g;
}

/// ||a - n|| / max(||a||, ||n||); 0 when both are zero.
inline double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
    double diff = 0.0, aa = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        aa += analytic[i] * analytic[i];
        nn += numeric[i] * numeric[i];
    }
    const double scale = std::sqrt(std::max(aa, nn));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

/// SGNS loss for one center vector, written from the definition.
inline double sgns_loss(std::span<const double> h, std::span<const double> pos,
                        const std::vector<std::vector<double>>& negs) {
    auto dot = [&](std::span<const double> u) {
        double s = 0;
        for (std::size_t i = 0; i < h.size(); ++i) s += u[i] * h[i];
        return s;
    };
    auto log_sigmoid = [](double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); };
    double loss = -log_sigmoid(dot(pos));
    for (const auto& n : negs) loss -= log_sigmoid(-dot(n));
    return loss;
}

}  // namespace custemb::oracle
