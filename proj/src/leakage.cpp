#include "cpalab/leakage.h"

#include "cpalab/error.h"
#include "cpalab/random.h"

#include <cmath>
#include <sstream>

namespace cpalab {

OperandRange operand_range(unsigned bits, Encoding encoding) {
    if (bits == 0 || bits > 16)
        throw ParameterError("operand width must be in [1, 16] bits, got " + std::to_string(bits));
    if (encoding == Encoding::Signed)
        return {-(1 << (bits - 1)), (1 << (bits - 1)) - 1};
    return {0, (1 << bits) - 1};
}

void ArrayConfig::validate() const {
    std::ostringstream problems;
    if (n_pe < 1)
        problems << "n_pe must be >= 1 (got " << n_pe << "); ";
    if (weight_bits < 1 || weight_bits > 16)
        problems << "weight_bits must be in [1, 16] (got " << weight_bits << "); ";
    if (input_bits < 1 || input_bits > 16)
        problems << "input_bits must be in [1, 16] (got " << input_bits << "); ";
    if (register_bits < 1 || register_bits > 32)
        problems << "register_bits must be in [1, 32] (got " << register_bits << "); ";
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
        problems << "noise_sigma must be finite and >= 0 (got " << noise_sigma << "); ";
    const std::string s = problems.str();
    if (!s.empty())
        throw ValidationError("invalid array config: " + s.substr(0, s.size() - 2));
}

LeakageSample hamming_weight(std::int32_t v) {
    return {static_cast<std::uint8_t>(popcount32(static_cast<std::uint32_t>(v)))};
}

LeakageSample hamming_distance(std::int32_t prev, std::int32_t next) {
    return hamming_weight(prev ^ next);
}

StepResult pe_step(const PEState &state, std::int32_t w, std::int32_t x, const ArrayConfig &config) {
    if (!config.weight_range().contains(w))
        throw RangeError("weight " + std::to_string(w) + " outside the " +
                         std::to_string(config.weight_bits) + "-bit weight range");
    if (!config.input_range().contains(x))
        throw RangeError("input " + std::to_string(x) + " outside the " +
                         std::to_string(config.input_bits) + "-bit input range");

    const std::uint32_t mask = config.register_mask();
    const std::int32_t next = wrap_register(mac32(state.accumulator, w, x), config.register_bits);
    // At tau 0 the register was cleared, so the distance to zero is the weight.
    const std::int32_t prev = state.tau == 0 ? 0 : state.accumulator;
    return {{next, state.tau + 1},
            {static_cast<std::uint8_t>(step_leakage(prev, next, mask))}};
}

double array_power(std::span<const LeakageSample> leakages, double noise_sigma, Rng *rng) {
    std::uint32_t sum = 0;
    for (const auto &l : leakages)
        sum += l.value;
    double power = static_cast<double>(sum);
    if (noise_sigma > 0.0) {
        if (rng == nullptr)
            throw ParameterError("array_power: noise_sigma > 0 requires a random stream");
        power += noise_sigma * rng->normal();
    }
    return power;
}

std::string to_string(Encoding e) { return e == Encoding::Signed ? "signed" : "unsigned"; }

Encoding encoding_from_string(const std::string &s) {
    if (s == "signed")
        return Encoding::Signed;
    if (s == "unsigned")
        return Encoding::Unsigned;
    throw ParameterError("unknown operand encoding '" + s + "' (expected signed or unsigned)");
}

} // namespace cpalab
