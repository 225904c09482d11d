#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace levygreen {

inline constexpr int kMaxDim = 3;

// Points live on the stack; d <= 3 everywhere in the library.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Rng = std::mt19937_64;

inline constexpr double kPi = 3.14159265358979323846;

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::uint64_t splitmix64(std::uint64_t& state);

// Independent stream for block `stream` of a run seeded with `seed`.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

Point make_point(std::initializer_list<double> xs);
Point zero_point(int d);

}  // namespace levygreen
