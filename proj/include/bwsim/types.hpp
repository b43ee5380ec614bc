#pragma once

#include <stdexcept>
#include <string>

namespace bwsim {

// Invalid layer, block or configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed fixture, config or calibration text.
class ParseError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

enum class Padding { zero_pad, valid };

const char* to_string(Padding p);
Padding parse_padding(const std::string& s);

// One convolution layer, stride 1.
struct LayerSpec {
    std::string name;
    int n_in = 1;
    int n_out = 1;
    int h_im = 1;
    int w_im = 1;
    int h_k = 1;
    Padding padding = Padding::zero_pad;

    int out_h() const { return padding == Padding::zero_pad ? h_im : h_im - h_k + 1; }
    int out_w() const { return padding == Padding::zero_pad ? w_im : w_im - h_k + 1; }
    // halo on each side; 0 for valid mode
    int pad() const { return padding == Padding::zero_pad ? (h_k - 1) / 2 : 0; }

    // throws ConfigError
    void validate() const;
};

}  // namespace bwsim
