#include "kiqr/cli.hpp"
#include "kiqr/common.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <sstream>

namespace kiqr::cli {

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 unavailable");
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    const auto got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(got));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["arguments"] = arguments;
  j["config"] = nlohmann::ordered_json::parse(config_json.empty() ? "{}" : config_json);
  j["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json inputs_json = nlohmann::ordered_json::array();
  for (const auto& [path, digest] : inputs) inputs_json.push_back({{"path", path}, {"sha256", digest}});
  j["inputs"] = inputs_json;
  j["version"] = version;
  j["wall_clock_seconds"] = wall_clock_seconds ? nlohmann::ordered_json(*wall_clock_seconds)
                                               : nlohmann::ordered_json(nullptr);
  return j.dump(2);
}

RunManifest RunManifest::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
    // fit.json embeds the manifest under "manifest".
    if (j.contains("manifest")) j = j["manifest"];
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.arguments = j.at("arguments").get<std::vector<std::string>>();
    m.config_json = j.at("config").dump();
    if (!j.at("seed").is_null()) m.seed = j.at("seed").get<unsigned long long>();
    for (const auto& input : j.at("inputs"))
      m.inputs.emplace_back(input.at("path").get<std::string>(), input.at("sha256").get<std::string>());
    m.version = j.at("version").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": not a run manifest (" + e.what() + ")");
  }
}

}  // namespace kiqr::cli
