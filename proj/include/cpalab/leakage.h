#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>

namespace cpalab {

class Rng;

/// How a weight or input bit pattern is interpreted.
enum class Encoding { Signed, Unsigned };

/// Inclusive integer range of an operand.
struct OperandRange {
    std::int32_t min;
    std::int32_t max;

    bool contains(std::int64_t v) const { return v >= min && v <= max; }
    std::uint32_t count() const { return static_cast<std::uint32_t>(max - min) + 1; }
};

OperandRange operand_range(unsigned bits, Encoding encoding);

/// Geometry and numeric widths of the PE array plus the noise regime.
///
/// The accumulator wraps modulo 2^register_bits (two's complement). No
/// headroom check is made: with the default 8-bit operands, eight MACs never
/// exceed 17 bits, so wrapping only occurs in deliberately narrow setups.
struct ArrayConfig {
    unsigned n_pe = 1;
    unsigned weight_bits = 8;
    unsigned input_bits = 8;
    unsigned register_bits = 32;
    double noise_sigma = 0.0;
    Encoding weight_encoding = Encoding::Signed;
    Encoding input_encoding = Encoding::Signed;

    OperandRange weight_range() const { return operand_range(weight_bits, weight_encoding); }
    OperandRange input_range() const { return operand_range(input_bits, input_encoding); }
    std::uint32_t register_mask() const {
        return register_bits >= 32 ? 0xFFFFFFFFu : ((1u << register_bits) - 1u);
    }

    /// Throws ValidationError listing every invalid field.
    void validate() const;

    bool operator==(const ArrayConfig &) const = default;
};

/// Hamming weight or distance of a register; always in [0, 32].
struct LeakageSample {
    std::uint8_t value = 0;

    bool operator==(const LeakageSample &) const = default;
};

/// Accumulator register of one PE. `tau` counts the MAC results stored so far;
/// a fresh state has accumulator 0 and tau 0.
struct PEState {
    std::int32_t accumulator = 0;
    std::uint32_t tau = 0;

    bool operator==(const PEState &) const = default;
};

struct StepResult {
    PEState state;
    LeakageSample leakage;
};

inline std::uint32_t popcount32(std::uint32_t v) { return static_cast<std::uint32_t>(std::popcount(v)); }

/// Wrapping 32-bit multiply-accumulate.
inline std::int32_t mac32(std::int32_t acc, std::int32_t w, std::int32_t x) {
    const auto product = static_cast<std::uint32_t>(static_cast<std::int64_t>(w) * x);
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(acc) + product);
}

LeakageSample hamming_weight(std::int32_t v);
LeakageSample hamming_distance(std::int32_t prev, std::int32_t next);

/// Perform one MAC on \p state. The first store (tau 0) leaks the Hamming
/// weight of the new accumulator; later stores leak the Hamming distance to
/// the previous value. Throws RangeError for out-of-range operands.
StepResult pe_step(const PEState &state, std::int32_t w, std::int32_t x,
                   const ArrayConfig &config = {});

/// Reduce \p v to a register of \p bits bits, sign-extended back to 32 bits.
inline std::int32_t wrap_register(std::int32_t v, unsigned bits) {
    const unsigned shift = 32 - bits;
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(v) << shift) >> shift;
}

/// Unchecked hot-path variant of the leakage rule, masked to the register
/// width.
inline std::uint32_t step_leakage(std::int32_t prev, std::int32_t next, std::uint32_t mask) {
    return popcount32((static_cast<std::uint32_t>(prev) ^ static_cast<std::uint32_t>(next)) & mask);
}

/// Sum of per-PE leakage at one step plus, when noise_sigma > 0, a single
/// Gaussian noise draw taken from \p rng.
double array_power(std::span<const LeakageSample> leakages, double noise_sigma, Rng *rng = nullptr);

std::string to_string(Encoding e);
Encoding encoding_from_string(const std::string &s);

} // namespace cpalab
