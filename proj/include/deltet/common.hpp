#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace deltet
{
    using Vec3 = Eigen::Vector3d;
    using Mat3 = Eigen::Matrix3d;

    using Tet = std::array<int, 4>;
    using Tri = std::array<int, 3>;
    using EdgeKey = std::array<int, 2>;

    enum class ErrorKind
    {
        invalid_argument,
        degenerate_input,
        degenerate_direction,
        degenerate_tet,
        stale_grid,
        not_found,
        nan_propagation,
        diverged,
        io,
        internal,
    };

    const char * to_string(ErrorKind kind);

    /// Single exception type for the library; `kind()` is machine-readable.
    class Error : public std::runtime_error
    {
    public:
        Error(ErrorKind kind, const std::string & what)
            : std::runtime_error(what), kind_(kind) {}

        ErrorKind kind() const noexcept { return kind_; }

    private:
        ErrorKind kind_;
    };

    /// Kernel execution mode. `serial` is the reference path kept for testing;
    /// `parallel` uses OpenMP with a fixed reduction order, so both produce
    /// bitwise-identical results.
    enum class Exec
    {
        serial,
        parallel,
    };

    void set_num_threads(int n);
    int num_threads();

    inline double squared(double x) { return x * x; }
}
