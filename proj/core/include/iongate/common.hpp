#pragma once

#include <complex>
#include <cstdint>
#include <numbers>

#include <Eigen/Dense>

namespace iongate {

using Real = double;
using Complex = std::complex<double>;

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using VecXc = Eigen::VectorXcd;
using MatXc = Eigen::MatrixXcd;

inline constexpr Real pi = std::numbers::pi;
inline constexpr Real two_pi = 2.0 * std::numbers::pi;
inline constexpr Complex im{0.0, 1.0};

// All internal frequencies are angular (rad/s); configs and CLI take plain Hz.
constexpr Real rad_from_hz(Real hz) { return two_pi * hz; }
constexpr Real hz_from_rad(Real w) { return w / two_pi; }

// splitmix64, used to derive independent per-stream seeds from (master, id).
// Scheduling-independent: stream k always gets the same seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

} // namespace iongate
