#pragma once

#include "common.hpp"

#include <span>
#include <vector>

namespace deltet
{
    struct AdamConfig
    {
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.0;  // decoupled (AdamW)
    };

    /// Adam with bias correction and decoupled weight decay over one flat
    /// parameter vector.
    class Adam
    {
    public:
        explicit Adam(AdamConfig config = {}) : config_(config) {}

        /// Resizes the moments on first use; throws invalid-argument when the
        /// sizes disagree afterwards.
        void step(std::span<double> params, std::span<const double> grads, double lr);

        /// Keeps moments of parameter groups listed in `kept` (old group
        /// index per new group, `group` scalars each) and zeroes the rest,
        /// for a new total of `new_groups` groups.
        void remap(const std::vector<int> & kept, std::size_t group, std::size_t new_groups);

        std::size_t steps() const { return t_; }
        const std::vector<double> & first_moment() const { return m_; }
        const std::vector<double> & second_moment() const { return v_; }

    private:
        AdamConfig config_;
        std::vector<double> m_, v_;
        std::size_t t_ = 0;
    };

    /// Flat view of a Vec3 array.
    inline std::span<double> flat(std::vector<Vec3> & v) { return {v.empty() ? nullptr : v[0].data(), 3 * v.size()}; }
    inline std::span<const double> flat(const std::vector<Vec3> & v)
    {
        return {v.empty() ? nullptr : v[0].data(), 3 * v.size()};
    }
}
