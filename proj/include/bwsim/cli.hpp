#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bwsim/golden.hpp"
#include "bwsim/types.hpp"

namespace bwsim::cli {

enum ExitCode { kOk = 0, kInvalid = 1, kMismatch = 2 };

// Layer fixture, '#' comments, relative paths resolve against the fixture's directory:
//   layer <name> <n_in> <n_out> <h_im> <w_im> <h_k> <same|valid>
//   input <path> | random
//   filters <path> | random
//   affine <path> | identity | random
struct LayerFixture {
    LayerSpec layer;
    std::string input = "random";
    std::string filters = "random";
    std::string affine = "identity";
};

LayerFixture parse_layer_fixture(std::istream& is, const std::string& base_dir = ".");
LayerFixture load_layer_fixture(const std::string& path);

struct LayerData {
    golden::FeatureMap input;
    golden::FilterSet filters;
    std::vector<golden::ChannelAffine> affine;
};

// Files are loaded; "random" entries are drawn from seed (same seed, same data).
LayerData materialize(const LayerFixture& fx, std::uint64_t seed);

// Network fixture path, or a bundled network name ("vgg19").
std::string resolve_network(const std::string& name_or_path);
std::string default_data_dir();

// argv[0] excluded. Errors print one "error: ..." line on err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bwsim::cli
