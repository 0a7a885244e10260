#pragma once

// Run artifacts: the self-describing policy table, SHA-256 hashing, and the
// reproducibility manifest. All outputs are pure functions of their inputs
// (no timestamps), so a (config, seed) pair reproduces every byte.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "maxminrl/types.hpp"

namespace maxminrl {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// Environment variable consulted for the output directory (the only
/// environment override the tools honor).
inline constexpr const char* kOutputDirEnvVar = "MAXMINRL_OUT";

std::string sha256_hex(const std::string& bytes);

/// Throws ConfigError naming the path on any I/O failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Policy artifact: a text table with a magic line and shape header,
///   maxminrl-policy 1
///   states <S>
///   actions <A>
/// followed by S rows of A logits at 17 significant digits (exact double
/// round-trip).
std::string policy_to_text(const SoftmaxPolicy& policy);
SoftmaxPolicy policy_from_text(const std::string& text);

SoftmaxPolicy load_policy(const std::string& path);
void save_policy(const std::string& path, const SoftmaxPolicy& policy);

/// Manifest describing one run: config hash, master seed, toolchain
/// versions, and the SHA-256 of every written output (name -> hash).
nlohmann::json build_manifest(
    const std::string& config_text, std::uint64_t seed,
    const std::vector<std::pair<std::string, std::string>>& named_outputs);

/// Output directory precedence: explicit flag, then the environment
/// variable, then the config value.
std::string resolve_output_dir(const std::string& flag_value,
                               const std::string& config_value);

}  // namespace maxminrl
