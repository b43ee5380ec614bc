#include "bwsim/types.hpp"

namespace bwsim {

const char* to_string(Padding p) { return p == Padding::zero_pad ? "same" : "valid"; }

Padding parse_padding(const std::string& s) {
    if (s == "same" || s == "zero_pad" || s == "pad") return Padding::zero_pad;
    if (s == "valid") return Padding::valid;
    throw ParseError("unknown padding '" + s + "' (expected same|valid)");
}

void LayerSpec::validate() const {
    auto fail = [&](const std::string& why) {
        throw ConfigError("layer '" + name + "': " + why);
    };
    if (n_in < 1 || n_out < 1) fail("channel counts must be positive");
    if (h_im < 1 || w_im < 1) fail("image size must be positive");
    if (h_k < 1) fail("kernel size must be positive");
    if (padding == Padding::zero_pad && h_k % 2 == 0)
        fail("even kernel " + std::to_string(h_k) + " cannot be zero-padded symmetrically");
    if (padding == Padding::valid && (h_k > h_im || h_k > w_im))
        fail("kernel larger than image in valid mode");
}

}  // namespace bwsim
