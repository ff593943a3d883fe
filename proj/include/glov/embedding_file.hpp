#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "glov/steering.hpp"

namespace glov {

// Binary layout: "GLOVEMB1", u32 count, u32 dim, then count*dim f32 values,
// all little-endian regardless of host byte order.
inline constexpr std::string_view kEmbeddingMagic = "GLOVEMB1";

struct EmbeddingTable {
    std::uint32_t count = 0;
    std::uint32_t dim = 0;
    std::vector<float> values;  // row-major

    Vector row(std::size_t i) const;

    friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

std::string encode_embeddings(const EmbeddingTable& table);
// Throws ParseError on a bad magic, a short or overlong payload.
EmbeddingTable decode_embeddings(std::string_view bytes);

EmbeddingTable read_embedding_file(const std::filesystem::path& path);
void write_embedding_file(const std::filesystem::path& path, const EmbeddingTable& table);

// Narrows double rows to f32; rows must share one width.
EmbeddingTable make_embedding_table(const std::vector<Vector>& rows);

}  // namespace glov
