#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace finsler {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline Vec to_vec(std::span<const double> s)
{
    Vec v(static_cast<int>(s.size()));
    for (int i = 0; i < v.size(); ++i) v[i] = s[i];
    return v;
}

inline std::vector<double> to_std(const Vec& v)
{ return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vec make_vec(std::initializer_list<double> xs)
{
    Vec v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

// Number of singular values above max(rel * sigma_max, abs_floor).
inline int numerical_rank(const Mat& m, double rel, double abs_floor = 0.0)
{
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0) return 0;
    double cut = std::max(rel * s[0], abs_floor);
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s[i] > cut) ++r;
    return r;
}

}  // namespace finsler
