#pragma once

// JSON readers and writers for channels, couplings and joint tables, and the
// exact fraction parser behind --px.

#include "martonlab/maps.hpp"
#include "martonlab/probcore.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace martonlab {

/// {"x_size": n, "y_given_x": [[...]], "z_given_x": [[...]], "px": [...]}, "px"
/// optional. Errors are InputError with a "<source>:<line>: " prefix.
ChannelFixture parse_channel_json(std::string_view text, std::string_view source = "<channel>");
ChannelFixture load_channel_file(const std::string& path);
nlohmann::ordered_json channel_to_json(const BroadcastChannel& ch, const std::optional<SimplexVector>& px = {});

/// {"p_uv": [[...]], "f": [[...]], "x_size": n}; "x_size" defaults to max(f) + 1.
CouplingWithMap parse_coupling_json(std::string_view text, std::string_view source = "<coupling>");
nlohmann::ordered_json coupling_to_json(const CouplingWithMap& c);

/// A 2-D array, or {"joint": [[...]]}.
Eigen::MatrixXd parse_joint_json(std::string_view text, std::string_view source = "<joint>");

std::string read_text_file(const std::string& path);

/// Comma-separated entries such as "1/3,1/3,1/3" or "0.8,0.2", evaluated in
/// exact rational arithmetic where the numbers allow it, then normalized.
std::vector<double> parse_fraction_list(std::string_view text);
/// Comma-separated plain reals, not normalized.
std::vector<double> parse_real_list(std::string_view text);

}  // namespace martonlab
