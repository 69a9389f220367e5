#pragma once

#include "diff.hpp"
#include "target.hpp"

namespace deltet
{
    struct LossWeights
    {
        double occupancy = 100.0;
        double distance = 25.0;
        double normal = 1.0;
        double fairness = 0.35;
        double odt = 0.1;
        double sign = 1.0;

        /// Throws invalid-argument on negative or non-finite weights.
        void validate() const;
    };

    struct SurfaceSample
    {
        int face = -1;
        std::array<double, 3> bary{};
        Vec3 position = Vec3::Zero();
        Vec3 normal = Vec3::Zero();  // unit face normal
    };

    /// Area-weighted uniform samples. Sample k depends only on (seed, k) and
    /// the mesh, not on the thread count. Throws invalid-argument for an empty
    /// mesh when n > 0.
    std::vector<SurfaceSample> sample_surface(const SurfaceMesh & mesh, std::size_t n, std::uint64_t seed);

    /// Point at the sample's (face, bary) on a mesh with the same faces.
    Vec3 sample_position(const SurfaceMesh & mesh, const SurfaceSample & s);

    /// n points of the Halton (2, 3, 5) sequence inside the target, by
    /// rejection in its bounding box.
    std::vector<Vec3> interior_probes(const Target & target, std::size_t n, std::uint64_t seed = 0);

    struct ReconTerms
    {
        double distance = 0.0;   // weighted
        double normal = 0.0;     // weighted
        double occupancy = 0.0;  // weighted
        std::size_t probes_outside = 0;

        double total() const { return distance + normal + occupancy; }
    };

    /// Geometric reconstruction loss against a target:
    ///   w_d mean sdf(x_k)^2 + w_n mean |n_k - n_target(x_k)|^2 + w_o occupancy,
    /// over surface samples x_k, where occupancy is the mean over interior
    /// probes of the distance to the mesh for probes the mesh does not
    /// enclose.
    class ReconLoss
    {
    public:
        ReconLoss(TargetPtr target, const LossWeights & weights, std::size_t samples, std::size_t probes = 512);

        const Target & target() const { return *target_; }
        const LossWeights & weights() const { return weights_; }
        std::size_t samples() const { return samples_; }
        const std::vector<Vec3> & probes() const { return probes_; }

        /// The probe set rotated by `seed` (seed 0 gives probes()).
        std::vector<Vec3> probes(std::uint64_t seed) const;

        /// Samples are frozen as (face, bary); the gradient treats them as
        /// fixed. `grad` receives dL/dv per mesh vertex (overwritten).
        ReconTerms evaluate(const SurfaceMesh & mesh, const std::vector<SurfaceSample> & samples, std::vector<Vec3> * grad = nullptr,
                            Exec exec = Exec::parallel) const;
        ReconTerms evaluate(const SurfaceMesh & mesh, const std::vector<SurfaceSample> & samples, const std::vector<Vec3> & probes,
                            std::vector<Vec3> * grad = nullptr, Exec exec = Exec::parallel) const;

        /// Draws `samples()` samples and the probe rotation with `seed` and evaluates.
        ReconTerms evaluate(const SurfaceMesh & mesh, std::uint64_t seed, std::vector<Vec3> * grad = nullptr,
                            Exec exec = Exec::parallel) const;

        /// Bit set (hashed) of the probes lying outside the mesh.
        std::uint64_t occupancy_signature(const SurfaceMesh & mesh) const;

    private:
        TargetPtr target_;
        LossWeights weights_;
        std::size_t samples_;
        std::size_t probe_count_ = 0;
        std::vector<Vec3> probes_;
    };

    /// Records the three reconstruction terms ("distance", "normal", "occupancy").
    ReconTerms record_recon(Tape & tape, const ReconLoss & loss, const std::vector<SurfaceSample> & samples,
                            Exec exec = Exec::parallel);
    ReconTerms record_recon(Tape & tape, const ReconLoss & loss, const std::vector<SurfaceSample> & samples,
                            const std::vector<Vec3> & probes, Exec exec = Exec::parallel);
    /// Samples and probes drawn from `seed`.
    ReconTerms record_recon(Tape & tape, const ReconLoss & loss, std::uint64_t seed, Exec exec = Exec::parallel);

    constexpr double kNormalErrorWeight = 0.1;

    struct SampleError
    {
        Vec3 position;
        double error;
    };

    /// |sdf(x_k)| + 0.1 |n_k - n_target(x_k)| at n surface samples.
    std::vector<SampleError> per_sample_error(const SurfaceMesh & mesh, const Target & target, std::size_t n, std::uint64_t seed);
}
