#include "brann/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "brann/text.hpp"

namespace brann {

namespace {

constexpr std::string_view kFormat = "brann-checkpoint/1";

std::vector<int> parse_shape(const std::string& shape) {
    std::vector<int> sizes;
    for (const auto& part : text::split(shape, '-')) {
        sizes.push_back(static_cast<int>(text::parse_int(part)));
    }
    return sizes;
}

}  // namespace

std::optional<std::string> Checkpoint::find(std::string_view key) const {
    for (const auto& [k, v] : metadata) {
        if (k == key) return v;
    }
    return std::nullopt;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    const auto& layout = ckpt.network.layout();
    std::vector<std::string> transfers;
    for (auto t : layout.transfers) transfers.emplace_back(to_string(t));

    out << "# brann checkpoint\n";
    out << "format: " << kFormat << '\n';
    out << "layout: " << layout.shape_string() << '\n';
    out << "transfers: " << text::join(transfers, ",") << '\n';
    out << "seed: " << ckpt.seed << '\n';
    for (const auto& [k, v] : ckpt.metadata) out << k << ": " << v << '\n';
    const ParamVector params = ckpt.network.flatten();
    out << "parameters: " << params.size() << '\n';
    for (Eigen::Index i = 0; i < params.size(); ++i) out << text::format_double(params[i]) << '\n';
}

Checkpoint read_checkpoint(std::istream& in) {
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& what) -> DataError {
        return DataError("checkpoint line " + std::to_string(line_no) + ": " + what);
    };

    std::optional<std::string> format, shape, transfers;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> metadata;
    long long count = -1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto colon = t.find(':');
        if (colon == std::string_view::npos) throw fail("expected 'key: value'");
        const std::string key(text::trim(t.substr(0, colon)));
        const std::string value(text::trim(t.substr(colon + 1)));
        if (key == "format") {
            format = value;
        } else if (key == "layout") {
            shape = value;
        } else if (key == "transfers") {
            transfers = value;
        } else if (key == "seed") {
            seed = static_cast<std::uint64_t>(text::parse_int(value));
        } else if (key == "parameters") {
            count = text::parse_int(value);
            break;
        } else {
            metadata.emplace_back(key, value);
        }
    }
    if (format != kFormat) throw fail("missing or unsupported format tag");
    if (!shape || !transfers || count < 0) throw fail("incomplete header");

    NetworkLayout layout;
    try {
        layout.layer_sizes = parse_shape(*shape);
        for (const auto& t : text::split(*transfers, ',')) layout.transfers.push_back(parse_transfer(t));
        layout.validate();
    } catch (const InvalidInput& e) {
        throw fail(e.what());
    }
    if (count != layout.parameter_count()) throw fail("parameter count does not match layout");

    ParamVector params(count);
    for (long long i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw fail("truncated parameter list");
        ++line_no;
        try {
            params[i] = text::parse_double(line);
        } catch (const InvalidInput& e) {
            throw fail(e.what());
        }
    }
    return Checkpoint{Network::from_params(std::move(layout), params), seed, std::move(metadata)};
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    return read_checkpoint(in);
}

}  // namespace brann
