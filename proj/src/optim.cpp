#include "deltet/optim.hpp"

#include <cmath>

namespace deltet
{
    static_assert(sizeof(Vec3) == 3 * sizeof(double), "Vec3 arrays must be contiguous doubles");

    void Adam::step(std::span<double> params, std::span<const double> grads, double lr)
    {
        if (params.size() != grads.size())
        {
            throw Error(ErrorKind::invalid_argument, "parameter and gradient sizes differ");
        }
        if (t_ == 0 && m_.empty())
        {
            m_.assign(params.size(), 0.0);
            v_.assign(params.size(), 0.0);
        }
        if (m_.size() != params.size())
        {
            throw Error(ErrorKind::invalid_argument, "optimizer state does not match the parameters");
        }
        ++t_;
        const double b1 = config_.beta1, b2 = config_.beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k)
        {
            const double g = grads[k];
            m_[k] = b1 * m_[k] + (1.0 - b1) * g;
            v_[k] = b2 * v_[k] + (1.0 - b2) * g * g;
            const double mh = m_[k] / c1;
            const double vh = v_[k] / c2;
            params[k] -= lr * (mh / (std::sqrt(vh) + config_.eps) + config_.weight_decay * params[k]);
        }
    }

    void Adam::remap(const std::vector<int> & kept, std::size_t group, std::size_t new_groups)
    {
        if (m_.empty())
            return;
        std::vector<double> m(new_groups * group, 0.0), v(new_groups * group, 0.0);
        for (std::size_t i = 0; i < kept.size(); ++i)
        {
            for (std::size_t k = 0; k < group; ++k)
            {
                m[i * group + k] = m_[static_cast<std::size_t>(kept[i]) * group + k];
                v[i * group + k] = v_[static_cast<std::size_t>(kept[i]) * group + k];
            }
        }
        m_ = std::move(m);
        v_ = std::move(v);
    }
}
