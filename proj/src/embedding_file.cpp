#include "glov/embedding_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "glov/error.hpp"

namespace glov {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    }
    return v;
}

}  // namespace

Vector EmbeddingTable::row(std::size_t i) const {
    if (i >= count) throw DimensionError(fmt::format("row {} outside [0, {})", i, count));
    const auto begin = values.begin() + static_cast<std::ptrdiff_t>(i * dim);
    return Vector(begin, begin + dim);
}

std::string encode_embeddings(const EmbeddingTable& table) {
    if (table.values.size() != static_cast<std::size_t>(table.count) * table.dim) {
        throw DimensionError("embedding table size does not match count x dim");
    }
    std::string out(kEmbeddingMagic);
    put_u32(out, table.count);
    put_u32(out, table.dim);
    out.reserve(out.size() + table.values.size() * 4);
    for (float f : table.values) put_u32(out, std::bit_cast<std::uint32_t>(f));
    return out;
}

EmbeddingTable decode_embeddings(std::string_view bytes) {
    constexpr std::size_t kHeader = 16;
    if (bytes.size() < kHeader || bytes.substr(0, kEmbeddingMagic.size()) != kEmbeddingMagic) {
        throw ParseError("not an embedding file (bad magic)", std::string(bytes.substr(0, 8)));
    }
    EmbeddingTable t;
    t.count = get_u32(bytes, 8);
    t.dim = get_u32(bytes, 12);
    const std::uint64_t n = static_cast<std::uint64_t>(t.count) * t.dim;
    if (bytes.size() - kHeader != n * 4) {
        throw ParseError(fmt::format("embedding payload is {} bytes, expected {}",
                                     bytes.size() - kHeader, n * 4),
                         {});
    }
    t.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.values[i] = std::bit_cast<float>(get_u32(bytes, kHeader + 4 * i));
    }
    return t;
}

EmbeddingTable read_embedding_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open embedding file '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return decode_embeddings(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()), e.raw());
    }
}

void write_embedding_file(const std::filesystem::path& path, const EmbeddingTable& table) {
    const std::string bytes = encode_embeddings(table);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(fmt::format("cannot write embedding file '{}'", path.string()));
}

EmbeddingTable make_embedding_table(const std::vector<Vector>& rows) {
    EmbeddingTable t;
    t.count = static_cast<std::uint32_t>(rows.size());
    t.dim = rows.empty() ? 0 : static_cast<std::uint32_t>(rows.front().size());
    for (const auto& r : rows) {
        if (r.size() != t.dim) throw DimensionError("embedding rows differ in width");
        for (double x : r) t.values.push_back(static_cast<float>(x));
    }
    return t;
}

}  // namespace glov
