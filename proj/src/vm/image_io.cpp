#include "subleq/image_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "subleq/error.hpp"

namespace subleq {

namespace {

constexpr std::string_view kMagic = "SQIM";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  return v;
}

}  // namespace

std::vector<Word> parse_text_image(std::string_view text) {
  std::vector<Word> words;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    ++line_no;
    pos = eol + 1;

    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;

    std::size_t i = first;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
      std::string_view token = line.substr(i, j - i);
      std::int64_t value = 0;
      const char* begin = token.data();
      if (!token.empty() && token.front() == '+') ++begin;
      auto [ptr, ec] = std::from_chars(begin, token.data() + token.size(), value);
      if (ec != std::errc{} || ptr != token.data() + token.size() || value < INT32_MIN ||
          value > INT32_MAX)
        throw Error(Errc::bad_image, "bad word '" + std::string(token) + "'", line_no,
                    static_cast<int>(i + 1));
      words.push_back(static_cast<Word>(value));
      i = j;
    }
  }
  return words;
}

std::string format_text_image(const std::vector<Word>& words, std::string_view comment) {
  std::ostringstream out;
  if (!comment.empty()) out << "# " << comment << '\n';
  for (std::size_t i = 0; i < words.size(); ++i) {
    out << words[i];
    out << ((i % 3 == 2 || i + 1 == words.size()) ? '\n' : ' ');
  }
  return out.str();
}

std::vector<Word> parse_binary_image(std::string_view bytes) {
  if (bytes.size() < 8 || bytes.substr(0, 4) != kMagic)
    throw Error(Errc::bad_image, "missing SQIM header");
  const std::uint32_t count = get_u32(bytes, 4);
  if (bytes.size() != 8 + static_cast<std::size_t>(count) * 4)
    throw Error(Errc::bad_image, "word count " + std::to_string(count) +
                                     " does not match payload of " +
                                     std::to_string(bytes.size() - 8) + " bytes");
  std::vector<Word> words(count);
  for (std::uint32_t i = 0; i < count; ++i) words[i] = static_cast<Word>(get_u32(bytes, 8 + 4 * i));
  return words;
}

std::string format_binary_image(const std::vector<Word>& words) {
  std::string out(kMagic);
  put_u32(out, static_cast<std::uint32_t>(words.size()));
  for (Word w : words) put_u32(out, static_cast<std::uint32_t>(w));
  return out;
}

std::vector<std::uint8_t> words_to_bytes(const std::vector<Word>& words) {
  std::vector<std::uint8_t> out;
  out.reserve(words.size() * 4);
  for (Word w : words) {
    const auto u = static_cast<std::uint32_t>(w);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((u >> (8 * i)) & 0xff));
  }
  return out;
}

std::vector<Word> bytes_to_words(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 4 != 0)
    throw Error(Errc::bad_length, "byte count " + std::to_string(bytes.size()) +
                                      " is not a multiple of 4");
  std::vector<Word> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t u = 0;
    for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(bytes[4 * i + k]) << (8 * k);
    out[i] = static_cast<Word>(u);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

std::vector<Word> read_image_file(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.starts_with(kMagic)) return parse_binary_image(bytes);
  return parse_text_image(bytes);
}

void write_image_file(const std::filesystem::path& path, const std::vector<Word>& words,
                      bool binary) {
  write_file(path, binary ? format_binary_image(words) : format_text_image(words));
}

}  // namespace subleq
