// SPDX-License-Identifier: Apache-2.0

#include "s2o/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

#include "s2o/parallel.hpp"

namespace s2o {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t x = seed;
    (void)splitmix64(x);
    x ^= splitmix64(x) + a;
    x ^= splitmix64(x) + b;
    x ^= splitmix64(x) + c;
    return splitmix64(x);
}

Rng::Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : s_) {
        s = splitmix64(x);
    }
}

std::uint64_t Rng::next_bits() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_bits() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    const double u1 = static_cast<double>((next_bits() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

std::int64_t Rng::uniform_int(std::int64_t n) {
    if (n <= 0) {
        throw std::invalid_argument("uniform_int needs n > 0");
    }
    return static_cast<std::int64_t>(next_bits() % static_cast<std::uint64_t>(n));
}

std::vector<std::int64_t> Rng::sample_distinct(std::int64_t count, std::int64_t n) {
    if (count > n) {
        throw std::invalid_argument("cannot sample more distinct values than the domain holds");
    }
    std::unordered_set<std::int64_t> seen;
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(count));
    while (static_cast<std::int64_t>(out.size()) < count) {
        const std::int64_t v = uniform_int(n);
        if (seen.insert(v).second) {
            out.push_back(v);
        }
    }
    return out;
}

std::vector<double> Rng::unit_direction(std::int64_t d) {
    std::vector<double> dir(static_cast<std::size_t>(d));
    double norm_sq = 0.0;
    for (auto& x : dir) {
        x = normal();
        norm_sq += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& x : dir) {
        x *= inv;
    }
    return dir;
}

StripePattern parse_stripe_pattern(const std::string& name) {
    if (name == "gaussian") return StripePattern::gaussian;
    if (name == "vertical-stripes" || name == "vertical") return StripePattern::vertical;
    if (name == "horizontal-stripes" || name == "horizontal") return StripePattern::horizontal;
    if (name == "slash-stripes" || name == "slash") return StripePattern::slash;
    if (name == "mixed") return StripePattern::mixed;
    throw std::invalid_argument("unknown pattern: " + name);
}

std::string to_string(StripePattern p) {
    switch (p) {
        case StripePattern::gaussian: return "gaussian";
        case StripePattern::vertical: return "vertical-stripes";
        case StripePattern::horizontal: return "horizontal-stripes";
        case StripePattern::slash: return "slash-stripes";
        case StripePattern::mixed: return "mixed";
    }
    return "?";
}

namespace {

constexpr std::uint64_t kBaseStream = 0x5b17;
constexpr std::uint64_t kPlantStream = 0x9a42;
constexpr std::uint64_t kSlashStream = 0xd3f1;

void add_scaled(float* row, const std::vector<double>& dir, double scale) {
    for (std::size_t i = 0; i < dir.size(); ++i) {
        row[i] = static_cast<float>(static_cast<double>(row[i]) + scale * dir[i]);
    }
}

// Sets the row's component along dir to exactly `target`.
void set_component(float* row, const std::vector<double>& dir, double target,
                   std::int64_t d) {
    double current = 0.0;
    for (std::int64_t i = 0; i < d; ++i) {
        current += static_cast<double>(row[i]) * dir[static_cast<std::size_t>(i)];
    }
    add_scaled(row, dir, target - current);
}

// Alignment amplitude: a query at amp * u against a key at amp * u scores
// amp^2 / sqrt(D), so amp = sqrt(gain * sqrt(D)) hits the requested boost.
double stripe_amp(double gain, std::int64_t d) {
    return std::sqrt(gain * std::sqrt(static_cast<double>(d)));
}

// Vertical stripes: planted keys carry the shared direction (with a per-key
// strength spread so the mass spectrum is not a cliff), every query carries
// it at unit strength, and all other keys have it projected out. Setting the
// component exactly keeps the planted score boost at gain * scale_j instead
// of burying it under direction-aligned background noise.
void plant_vertical(SyntheticData& data, const SyntheticSpec& spec, Rng& plant_rng) {
    const Tensor4& q = data.q;
    const double amp = stripe_amp(spec.stripe_gain, q.d);
    const std::vector<std::int64_t> keys = plant_rng.sample_distinct(spec.stripe_count, q.l);
    const std::vector<double> dir = plant_rng.unit_direction(q.d);
    std::vector<double> key_scale(keys.size());
    for (double& s : key_scale) {
        s = 0.5 + 0.5 * plant_rng.uniform();
    }
    std::vector<std::uint8_t> planted(static_cast<std::size_t>(q.l), 0);
    for (std::int64_t j : keys) {
        planted[static_cast<std::size_t>(j)] = 1;
    }
    if (amp > 0.0) {
        for (std::int64_t zi = 0; zi < q.z; ++zi) {
            for (std::int64_t hi = 0; hi < q.h; ++hi) {
                for (std::int64_t i = 0; i < q.l; ++i) {
                    set_component(data.q.row(zi, hi, i), dir, amp, q.d);
                }
                for (std::int64_t j = 0; j < q.l; ++j) {
                    if (!planted[static_cast<std::size_t>(j)]) {
                        set_component(data.k.row(zi, hi, j), dir, 0.0, q.d);
                    }
                }
                for (std::size_t t = 0; t < keys.size(); ++t) {
                    set_component(data.k.row(zi, hi, keys[t]), dir, amp * key_scale[t], q.d);
                }
            }
        }
    }
    data.planted_keys.insert(data.planted_keys.end(), keys.begin(), keys.end());
}

// Horizontal stripes: same hot-key backbone, but query-side alignment varies
// per row. Planted rows align fully; the rest hold a random partial
// alignment, so rows concentrate on the hot columns at different sharpness
// and the guide score cleanly separates them.
void plant_horizontal(SyntheticData& data, const SyntheticSpec& spec, Rng& plant_rng) {
    const Tensor4& q = data.q;
    const double amp = stripe_amp(spec.stripe_gain, q.d);
    const std::vector<std::int64_t> keys = plant_rng.sample_distinct(spec.stripe_count, q.l);
    const std::vector<std::int64_t> rows = plant_rng.sample_distinct(spec.stripe_count, q.l);
    const std::vector<double> dir = plant_rng.unit_direction(q.d);
    std::vector<double> key_scale(keys.size());
    for (double& s : key_scale) {
        s = 0.5 + 0.5 * plant_rng.uniform();
    }
    std::vector<double> row_scale(static_cast<std::size_t>(q.l));
    for (double& s : row_scale) {
        s = 0.55 + 0.35 * plant_rng.uniform();
    }
    for (std::int64_t i : rows) {
        row_scale[static_cast<std::size_t>(i)] = 1.0;
    }
    std::vector<std::uint8_t> planted(static_cast<std::size_t>(q.l), 0);
    for (std::int64_t j : keys) {
        planted[static_cast<std::size_t>(j)] = 1;
    }
    if (amp > 0.0) {
        for (std::int64_t zi = 0; zi < q.z; ++zi) {
            for (std::int64_t hi = 0; hi < q.h; ++hi) {
                for (std::int64_t i = 0; i < q.l; ++i) {
                    set_component(data.q.row(zi, hi, i), dir,
                                  amp * row_scale[static_cast<std::size_t>(i)], q.d);
                }
                for (std::int64_t j = 0; j < q.l; ++j) {
                    if (!planted[static_cast<std::size_t>(j)]) {
                        set_component(data.k.row(zi, hi, j), dir, 0.0, q.d);
                    }
                }
                for (std::size_t t = 0; t < keys.size(); ++t) {
                    set_component(data.k.row(zi, hi, keys[t]), dir, amp * key_scale[t], q.d);
                }
            }
        }
    }
    data.planted_keys.insert(data.planted_keys.end(), keys.begin(), keys.end());
    data.planted_queries.insert(data.planted_queries.end(), rows.begin(), rows.end());
}

// Slash stripes: each planted offset pairs token i with key i - delta via a
// per-position rotating direction, lighting up a thin diagonal.
void plant_slash(SyntheticData& data, const SyntheticSpec& spec, Rng& plant_rng) {
    const Tensor4& q = data.q;
    const std::int64_t max_offset = std::max<std::int64_t>(1, q.l / 8);
    std::vector<std::int64_t> offsets;
    std::vector<double> stripe_scale;
    for (std::int64_t s = 0; s < spec.stripe_count; ++s) {
        offsets.push_back(1 + plant_rng.uniform_int(max_offset));
        stripe_scale.push_back(0.6 + 0.4 * plant_rng.uniform());
    }
    for (std::size_t s = 0; s < offsets.size() && spec.stripe_gain > 0.0; ++s) {
        const std::int64_t delta = offsets[s];
        const double amp = stripe_amp(spec.stripe_gain * stripe_scale[s], q.d);
        for (std::int64_t i = delta; i < q.l; ++i) {
            Rng dir_rng(mix_seed(spec.seed, kSlashStream, static_cast<std::uint64_t>(s),
                                 static_cast<std::uint64_t>(i)));
            const std::vector<double> dir = dir_rng.unit_direction(q.d);
            for (std::int64_t zi = 0; zi < q.z; ++zi) {
                for (std::int64_t hi = 0; hi < q.h; ++hi) {
                    add_scaled(data.q.row(zi, hi, i), dir, amp);
                    add_scaled(data.k.row(zi, hi, i - delta), dir, amp);
                }
            }
        }
    }
    data.slash_offsets = offsets;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::int64_t z, std::int64_t h,
                                 std::int64_t l, std::int64_t d) {
    if (spec.pattern != StripePattern::gaussian && spec.stripe_count >= l) {
        throw std::invalid_argument("dims too small for stripe_count");
    }
    if (!std::isfinite(spec.stripe_gain)) {
        throw std::invalid_argument("stripe_gain must be finite");
    }
    SyntheticData data;
    data.q = Tensor4(z, h, l, d);
    data.k = Tensor4(z, h, l, d);
    data.v = Tensor4(z, h, l, d);

    parallel_for(z * h, [&](std::int64_t slice) {
        const std::int64_t zi = slice / h;
        const std::int64_t hi = slice % h;
        Rng rng(mix_seed(spec.seed, kBaseStream, static_cast<std::uint64_t>(zi),
                         static_cast<std::uint64_t>(hi)));
        for (Tensor4* t : {&data.q, &data.k, &data.v}) {
            float* row = t->row(zi, hi, 0);
            for (std::int64_t i = 0; i < l * d; ++i) {
                row[i] = static_cast<float>(rng.normal());
            }
        }
    });

    Rng plant_rng(mix_seed(spec.seed, kPlantStream));
    switch (spec.pattern) {
        case StripePattern::gaussian:
            break;
        case StripePattern::vertical:
            plant_vertical(data, spec, plant_rng);
            break;
        case StripePattern::horizontal:
            plant_horizontal(data, spec, plant_rng);
            break;
        case StripePattern::slash:
            plant_slash(data, spec, plant_rng);
            break;
        case StripePattern::mixed: {
            plant_vertical(data, spec, plant_rng);
            plant_horizontal(data, spec, plant_rng);
            // a couple of mild slashes: every slash direction leaks variance
            // into all other scores, so the diagonal share stays small
            SyntheticSpec slash_spec = spec;
            slash_spec.stripe_count = std::min<std::int64_t>(2, spec.stripe_count);
            slash_spec.stripe_gain = 0.5 * spec.stripe_gain;
            plant_slash(data, slash_spec, plant_rng);
            break;
        }
    }
    return data;
}

}  // namespace s2o
