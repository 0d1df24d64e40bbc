#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace salab {

// Counter-based generator: the output at draw i is a pure function of
// (key, i), so a stream can be reconstructed from its key alone and results
// do not depend on how trajectories are scheduled across workers.
//
// Streams are derived as key = h(master_seed, stream, substream). Each
// trajectory owns one stream and advances its counter sequentially.
class CounterRng {
public:
    CounterRng(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t substream = 0)
        : key_(derive_key(master_seed, stream, substream)) {}

    std::uint64_t next_u64() {
        std::uint64_t x = key_ + 0x9E3779B97F4A7C15ULL * ++ctr_;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    // uniform on (0, 1); never returns 0 so log() is safe
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    Eigen::VectorXd gaussian_vector(int dim) {
        Eigen::VectorXd z(dim);
        for (int i = 0; i < dim; ++i) z(i) = next_gaussian();
        return z;
    }

    // Inverse-CDF draw from a discrete distribution given as cumulative weights.
    // cumulative must be nondecreasing with back() == 1 (within rounding).
    int next_categorical(const Eigen::VectorXd& cumulative) {
        const double u = next_uniform();
        const int n = static_cast<int>(cumulative.size());
        for (int i = 0; i < n - 1; ++i) {
            if (u < cumulative(i)) return i;
        }
        return n - 1;
    }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x = (x ^ (x >> 33)) * 0xFF51AFD7ED558CCDULL;
        x = (x ^ (x >> 33)) * 0xC4CEB9FE1A85EC53ULL;
        return x ^ (x >> 33);
    }

    static std::uint64_t derive_key(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t substream) {
        std::uint64_t k = mix(master ^ 0x2545F4914F6CDD1DULL);
        k = mix(k ^ (stream + 0x9E3779B97F4A7C15ULL));
        k = mix(k ^ (substream + 0xD1B54A32D192ED03ULL));
        return k;
    }

    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace salab
