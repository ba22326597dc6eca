#pragma once

#include "autorecon/random.hpp"
#include "autorecon/tensor.hpp"

#include <cstring>

namespace testing {

inline autorecon::Tensor random_tensor(autorecon::Xoshiro256& rng, autorecon::Index rows, autorecon::Index cols,
                                       double lo = -1.0, double hi = 1.0) {
    autorecon::Tensor t(rows, cols);
    for (autorecon::Index i = 0; i < t.size(); ++i) {
        t.data()[i] = rng.uniform(lo, hi);
    }
    return t;
}

inline bool bitwise_equal(const autorecon::Tensor& a, const autorecon::Tensor& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

inline autorecon::Tensor mat(std::initializer_list<std::initializer_list<double>> rows) {
    autorecon::Tensor t(static_cast<autorecon::Index>(rows.size()),
                        static_cast<autorecon::Index>(rows.begin()->size()));
    autorecon::Index r = 0;
    for (const auto& row : rows) {
        autorecon::Index c = 0;
        for (double v : row) {
            t(r, c++) = v;
        }
        ++r;
    }
    return t;
}

}  // namespace testing
