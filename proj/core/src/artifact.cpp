// artifact.cpp — policy serialization, hashing, manifests.

#include "maxminrl/artifact.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "maxminrl/errors.hpp"

namespace maxminrl {

namespace {

constexpr const char* kPolicyMagic = "maxminrl-policy";
constexpr int kPolicyFormatVersion = 1;

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr ||
        EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &length) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("SHA-256 digest computation failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0x0f]);
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot open file '" + path + "' for writing");
    }
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw ConfigError("failed writing file '" + path + "'");
    }
}

std::string policy_to_text(const SoftmaxPolicy& policy) {
    std::ostringstream out;
    out << kPolicyMagic << ' ' << kPolicyFormatVersion << '\n';
    out << "states " << policy.logits.rows() << '\n';
    out << "actions " << policy.logits.cols() << '\n';
    char buf[40];
    for (int s = 0; s < policy.logits.rows(); ++s) {
        for (int a = 0; a < policy.logits.cols(); ++a) {
            std::snprintf(buf, sizeof buf, "%.17g", policy.logits(s, a));
            out << buf << (a + 1 == policy.logits.cols() ? '\n' : ' ');
        }
    }
    return out.str();
}

SoftmaxPolicy policy_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kPolicyMagic) {
        throw ConfigError("not a policy artifact (bad magic line)");
    }
    if (version != kPolicyFormatVersion) {
        throw ConfigError("unsupported policy artifact version " +
                          std::to_string(version));
    }
    std::string key;
    int n_states = 0;
    int n_actions = 0;
    if (!(in >> key >> n_states) || key != "states" || n_states < 1) {
        throw ConfigError("policy artifact missing a valid 'states' header");
    }
    if (!(in >> key >> n_actions) || key != "actions" || n_actions < 1) {
        throw ConfigError("policy artifact missing a valid 'actions' header");
    }
    SoftmaxPolicy policy;
    policy.logits = Mat::Zero(n_states, n_actions);
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            double value = 0.0;
            if (!(in >> value)) {
                throw ConfigError(
                    "policy artifact truncated at logit (" +
                    std::to_string(s) + ", " + std::to_string(a) + ")");
            }
            policy.logits(s, a) = value;
        }
    }
    double extra = 0.0;
    if (in >> extra) {
        throw ConfigError("policy artifact has trailing data beyond the "
                          "declared shape");
    }
    return policy;
}

SoftmaxPolicy load_policy(const std::string& path) {
    try {
        return policy_from_text(read_text_file(path));
    } catch (const ConfigError& err) {
        throw ConfigError(std::string(err.what()) + " (artifact '" + path +
                          "')");
    }
}

void save_policy(const std::string& path, const SoftmaxPolicy& policy) {
    write_text_file(path, policy_to_text(policy));
}

nlohmann::json build_manifest(
    const std::string& config_text, std::uint64_t seed,
    const std::vector<std::pair<std::string, std::string>>& named_outputs) {
    nlohmann::json outputs = nlohmann::json::object();
    for (const auto& [name, content] : named_outputs) {
        outputs[name] = sha256_hex(content);
    }
    return nlohmann::json{
        {"format", "maxminrl-manifest-1"},
        {"config_sha256", sha256_hex(config_text)},
        {"seed", seed},
        {"versions",
         {{"library", kLibraryVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__}}},
        {"outputs", outputs},
    };
}

std::string resolve_output_dir(const std::string& flag_value,
                               const std::string& config_value) {
    if (!flag_value.empty()) return flag_value;
    const char* env = std::getenv(kOutputDirEnvVar);
    if (env != nullptr && env[0] != '\0') return std::string(env);
    return config_value;
}

}  // namespace maxminrl
