#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brann/network.hpp"

namespace brann {

/// Text checkpoint. Layout:
///
///   # brann checkpoint
///   format: brann-checkpoint/1
///   layout: 20-32-1
///   transfers: tansig,purelin
///   seed: 42
///   <any extra "key: value" metadata lines>
///   parameters: <k>
///   <k lines, one parameter each, shortest round-trip decimal>
struct Checkpoint {
    Network network;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> metadata;

    std::optional<std::string> find(std::string_view key) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace brann
