#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "subleq/vm.hpp"

namespace subleq {

// Text images (".simg"): '#' comment lines, then whitespace-separated
// signed decimal words.
std::vector<Word> parse_text_image(std::string_view text);
std::string format_text_image(const std::vector<Word>& words, std::string_view comment = {});

// Binary images: "SQIM", u32 LE word count, then that many i32 LE words.
std::vector<Word> parse_binary_image(std::string_view bytes);
std::string format_binary_image(const std::vector<Word>& words);

// Little-endian byte view used by the array host interface.
std::vector<std::uint8_t> words_to_bytes(const std::vector<Word>& words);
std::vector<Word> bytes_to_words(const std::vector<std::uint8_t>& bytes);

// Picks the format by the magic prefix.
std::vector<Word> read_image_file(const std::filesystem::path& path);
void write_image_file(const std::filesystem::path& path, const std::vector<Word>& words,
                      bool binary);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace subleq
