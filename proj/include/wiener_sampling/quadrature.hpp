#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace wsamp {

struct QuadNode {
    double x;
    double w;
};

/// Composite 16-point Gauss-Legendre rule on [lo, hi] with about `nodes`
/// points in total (rounded up to a whole number of panels).
inline std::vector<QuadNode> composite_gauss_legendre(double lo, double hi, std::size_t nodes) {
    using rule = boost::math::quadrature::gauss<double, 16>;
    const auto& absc = rule::abscissa();
    const auto& wts = rule::weights();
    const std::size_t panels = std::max<std::size_t>(1, (nodes + 15) / 16);
    const double width = (hi - lo) / static_cast<double>(panels);
    std::vector<QuadNode> out;
    out.reserve(panels * 16);
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = lo + (static_cast<double>(p) + 0.5) * width;
        const double half = 0.5 * width;
        for (std::size_t i = 0; i < absc.size(); ++i) {
            out.push_back({mid - half * absc[i], half * wts[i]});
            out.push_back({mid + half * absc[i], half * wts[i]});
        }
    }
    return out;
}

}  // namespace wsamp
