#include "stencilfd/fd.hpp"

#include <stdexcept>
#include <string>

namespace sfd {

std::vector<StencilTap> fd_coefficients(int deriv_order, int accuracy) {
    if (deriv_order != 1 && deriv_order != 2)
        throw std::invalid_argument("fd_coefficients: derivative order must be 1 or 2, got " +
                                    std::to_string(deriv_order));
    if (accuracy < 2 || accuracy % 2 != 0)
        throw std::invalid_argument("fd_coefficients: accuracy must be a positive even number, got " +
                                    std::to_string(accuracy));

    const int p = accuracy / 2;
    const int n_nodes = 2 * p + 1;
    std::vector<long> nodes(n_nodes);
    for (int i = 0; i < n_nodes; ++i) nodes[i] = i - p;

    // Fornberg's recursion for weights of derivatives 0..m at z = 0 over an
    // increasing subset of the nodes.  Layers are indexed [deriv][node].
    const int m_max = deriv_order;
    auto layer = [&] {
        return std::vector<std::vector<Rational>>(
            m_max + 1, std::vector<Rational>(n_nodes, Rational(0)));
    };
    auto prev = layer();
    auto cur = layer();
    prev[0][0] = Rational(1);
    Rational c1(1);
    for (int n = 1; n < n_nodes; ++n) {
        for (auto& row : cur)
            for (auto& w : row) w = Rational(0);
        Rational c2(1);
        for (int v = 0; v < n; ++v) {
            const Rational c3(nodes[n] - nodes[v]);
            c2 = c2 * c3;
            for (int m = 0; m <= std::min(n, m_max); ++m) {
                Rational t = Rational(nodes[n]) * prev[m][v];
                if (m > 0) t = t - Rational(m) * prev[m - 1][v];
                cur[m][v] = t / c3;
            }
        }
        for (int m = 0; m <= std::min(n, m_max); ++m) {
            Rational t = m > 0 ? Rational(m) * prev[m - 1][n - 1] : Rational(0);
            t = t - Rational(nodes[n - 1]) * prev[m][n - 1];
            cur[m][n] = (c1 / c2) * t;
        }
        c1 = c2;
        std::swap(prev, cur);
    }

    std::vector<StencilTap> taps;
    for (int i = 0; i < n_nodes; ++i) {
        const Rational& w = prev[deriv_order][i];
        if (!w.is_zero()) taps.push_back({nodes[i], w});
    }
    return taps;
}

}  // namespace sfd
