#include "cobert/matrix.hpp"

#include <cmath>

namespace cobert {

bool Matrix::all_finite() const {
    for (float v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<float>> rs) {
    Matrix m;
    m.rows = static_cast<int>(rs.size());
    m.cols = rs.size() ? static_cast<int>(rs.begin()->size()) : 0;
    m.data.reserve(static_cast<size_t>(m.rows) * m.cols);
    for (const auto& r : rs) {
        for (float v : r) m.data.push_back(v);
    }
    return m;
}

int Mask::valid_count() const {
    int n = 0;
    for (uint8_t f : valid) n += (f != 0);
    return n;
}

}  // namespace cobert
