#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

// Dense Gaussian elimination with partial pivoting; a is row-major n x n.
inline std::vector<double> solve_linear(std::vector<double> a,
                                        std::vector<double> b) {
    const std::size_t n = b.size();
    if (a.size() != n * n) throw std::invalid_argument("solve_linear: shape");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col]))
                piv = r;
        if (std::fabs(a[piv * n + col]) < 1e-300)
            throw std::runtime_error("solve_linear: singular matrix");
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c)
                std::swap(a[piv * n + c], a[col * n + c]);
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a[r * n + col] / a[col * n + col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c)
                a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ri = n; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri * n + c] * x[c];
        x[ri] = s / a[ri * n + ri];
    }
    return x;
}

} // namespace oracle
