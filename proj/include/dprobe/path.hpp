#pragma once

#include "dprobe/vec3.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace dprobe {

enum class Extension { Constant, Linear };

namespace detail {
inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const Vec3& v) { return norm(v); }
} // namespace detail

/// Piecewise-linear function of time through control points (t_i, v_i).
/// Outside [t_0, t_last] the path is continued constantly or by the end segment.
template <class T>
class PiecewiseLinear {
public:
    struct Knot {
        double t;
        T value;
    };

    PiecewiseLinear() = default;
    explicit PiecewiseLinear(std::vector<Knot> knots, Extension ext = Extension::Constant)
        : knots_(std::move(knots)), ext_(ext)
    {
        if (knots_.empty()) {
            throw std::invalid_argument("piecewise-linear path needs at least one control point");
        }
        for (std::size_t i = 1; i < knots_.size(); ++i) {
            if (!(knots_[i].t > knots_[i - 1].t)) {
                throw std::invalid_argument("control point times must be strictly increasing");
            }
        }
    }

    static PiecewiseLinear constant(const T& v) { return PiecewiseLinear({{0.0, v}}); }

    T operator()(double t) const
    {
        const std::size_t n = knots_.size();
        if (n == 1) {
            return knots_[0].value;
        }
        if (t <= knots_.front().t) {
            if (ext_ == Extension::Constant) {
                return knots_.front().value;
            }
            return lerp(0, t);
        }
        if (t >= knots_.back().t) {
            if (ext_ == Extension::Constant) {
                return knots_.back().value;
            }
            return lerp(n - 2, t);
        }
        // Few knots in practice; linear scan beats binary search below ~16.
        std::size_t i = 0;
        if (n > 16) {
            auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                       [](double tt, const Knot& k) { return tt < k.t; });
            i = static_cast<std::size_t>(it - knots_.begin()) - 1;
        } else {
            while (knots_[i + 1].t < t) {
                ++i;
            }
        }
        return lerp(i, t);
    }

    /// Slope on the segment containing t (one-sided from the right at knots).
    T derivative(double t) const
    {
        const std::size_t n = knots_.size();
        if (n == 1) {
            return T{};
        }
        if (t < knots_.front().t || t >= knots_.back().t) {
            if (ext_ == Extension::Constant) {
                return T{};
            }
            return t < knots_.front().t ? slope(0) : slope(n - 2);
        }
        std::size_t i = 0;
        while (knots_[i + 1].t <= t) {
            ++i;
        }
        return slope(i);
    }

    /// Largest segment slope magnitude (global Lipschitz constant).
    double lipschitz() const
    {
        double l = 0.0;
        for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
            l = std::max(l, detail::magnitude(slope(i)));
        }
        return l;
    }

    const std::vector<Knot>& knots() const { return knots_; }
    Extension extension() const { return ext_; }

    /// Times where the path is not differentiable.
    std::vector<double> kinks() const
    {
        std::vector<double> out;
        if (knots_.size() < 2) {
            return out;
        }
        if (ext_ == Extension::Constant) {
            out.push_back(knots_.front().t);
        }
        for (std::size_t i = 1; i + 1 < knots_.size(); ++i) {
            out.push_back(knots_[i].t);
        }
        if (ext_ == Extension::Constant) {
            out.push_back(knots_.back().t);
        }
        return out;
    }

    /// True if the path takes a single value on [a, b].
    bool constant_on(double a, double b) const
    {
        if (knots_.size() == 1) {
            return true;
        }
        const T va = (*this)(a);
        for (const auto& k : knots_) {
            if (k.t > a && k.t < b && !(k.value == va)) {
                return false;
            }
        }
        return (*this)(b) == va;
    }

private:
    T slope(std::size_t i) const
    {
        return (knots_[i + 1].value - knots_[i].value) * (1.0 / (knots_[i + 1].t - knots_[i].t));
    }
    T lerp(std::size_t i, double t) const
    {
        const double w = (t - knots_[i].t) / (knots_[i + 1].t - knots_[i].t);
        return knots_[i].value + (knots_[i + 1].value - knots_[i].value) * w;
    }

    std::vector<Knot> knots_;
    Extension ext_ = Extension::Constant;
};

using ScalarPath = PiecewiseLinear<double>;
using PointPath = PiecewiseLinear<Vec3>;

} // namespace dprobe
