#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace qsd {

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Downhill simplex (reflection 1, expansion 2, contraction 0.5, shrink 0.5).
/// Converged when the value spread falls below ftol and the vertex spread
/// below xtol; otherwise returns best-so-far with converged = false.
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& fn,
                                 std::vector<double> x0, double scale, int max_iters,
                                 double ftol, double xtol,
                                 const std::function<void(int, double)>& on_iteration = {}) {
    std::size_t n = x0.size();
    if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");
    std::vector<std::vector<double>> pts(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += scale;
    std::vector<double> vals(n + 1);
    for (std::size_t i = 0; i <= n; ++i) vals[i] = fn(pts[i]);

    std::vector<std::size_t> order(n + 1);
    SimplexResult out;
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        std::size_t best = order[0], worst = order[n], second = order[n - 1];
        if (on_iteration) on_iteration(iter, vals[best]);

        double fspread = vals[worst] - vals[best];
        double xspread = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            xspread = std::max(xspread, std::abs(pts[worst][i] - pts[best][i]));
        if (fspread <= ftol && xspread <= xtol) {
            out.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == worst) continue;
            for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[k][i];
        }
        for (double& c : centroid) c /= double(n);

        auto blend = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t i = 0; i < n; ++i)
                p[i] = centroid[i] + t * (pts[worst][i] - centroid[i]);
            return p;
        };

        std::vector<double> refl = blend(-1.0);
        double frefl = fn(refl);
        if (frefl < vals[best]) {
            std::vector<double> exp_pt = blend(-2.0);
            double fexp = fn(exp_pt);
            if (fexp < frefl) {
                pts[worst] = std::move(exp_pt);
                vals[worst] = fexp;
            } else {
                pts[worst] = std::move(refl);
                vals[worst] = frefl;
            }
            continue;
        }
        if (frefl < vals[second]) {
            pts[worst] = std::move(refl);
            vals[worst] = frefl;
            continue;
        }
        bool outside = frefl < vals[worst];
        std::vector<double> contr = blend(outside ? -0.5 : 0.5);
        double fcontr = fn(contr);
        if (fcontr < std::min(frefl, vals[worst])) {
            pts[worst] = std::move(contr);
            vals[worst] = fcontr;
            continue;
        }
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == best) continue;
            for (std::size_t i = 0; i < n; ++i)
                pts[k][i] = pts[best][i] + 0.5 * (pts[k][i] - pts[best][i]);
            vals[k] = fn(pts[k]);
        }
    }
    std::size_t arg = 0;
    for (std::size_t k = 1; k <= n; ++k)
        if (vals[k] < vals[arg]) arg = k;
    out.x = pts[arg];
    out.value = vals[arg];
    out.iterations = iter;
    return out;
}

}  // namespace qsd
