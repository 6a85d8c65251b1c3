#include "dagfm/data/movielens.hpp"

#include <array>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dagfm/numcore/errors.hpp"

namespace dagfm {

namespace {

std::vector<std::string> split_double_colon(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find("::", start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(line.substr(start));
      return parts;
    }
    parts.emplace_back(line.substr(start, pos - start));
    start = pos + 2;
  }
}

// Comma is the CSV separator; the raw files never use it in the kept columns,
// but guard anyway so a stray one cannot shift columns.
std::string csv_safe(std::string value) {
  for (char& c : value) {
    if (c == ',') c = ';';
  }
  return value;
}

template <class Fn>
void for_each_record(const std::filesystem::path& path, std::size_t expected_cols, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line == "\r") continue;
    auto parts = split_double_colon(line);
    if (parts.size() != expected_cols) {
      throw ParseError(path.filename().string() + ": expected " + std::to_string(expected_cols) + " fields, got " +
                       std::to_string(parts.size()) + " (line " + std::to_string(line_number) + ")");
    }
    fn(parts, line_number);
  }
}

}  // namespace

MovieLensSummary convert_movielens(const std::filesystem::path& source_dir, const std::filesystem::path& csv_out) {
  // user id -> gender, age, occupation, zip
  std::unordered_map<std::string, std::array<std::string, 4>> users;
  for_each_record(source_dir / "users.dat", 5, [&](std::vector<std::string>& p, std::size_t) {
    users[p[0]] = {csv_safe(p[1]), csv_safe(p[2]), csv_safe(p[3]), csv_safe(p[4])};
  });
  std::unordered_map<std::string, std::string> genre;
  for_each_record(source_dir / "movies.dat", 3, [&](std::vector<std::string>& p, std::size_t) {
    const std::string& genres = p[2];
    genre[p[0]] = csv_safe(genres.substr(0, genres.find('|')));
  });

  std::ofstream out(csv_out, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + csv_out.string());
  out << "label,user_id,gender,age,occupation,zip,movie_id,genre\n";

  MovieLensSummary summary;
  for_each_record(source_dir / "ratings.dat", 4, [&](std::vector<std::string>& p, std::size_t line_number) {
    auto user = users.find(p[0]);
    auto movie = genre.find(p[1]);
    if (user == users.end() || movie == genre.end()) {
      throw ParseError("ratings.dat references an unknown user or movie (line " + std::to_string(line_number) + ")");
    }
    int rating = 0;
    try {
      rating = std::stoi(p[2]);
    } catch (const std::exception&) {
      throw ParseError("ratings.dat: bad rating '" + p[2] + "' (line " + std::to_string(line_number) + ")");
    }
    const int label = rating >= 4 ? 1 : 0;
    const auto& u = user->second;
    out << label << ',' << csv_safe(p[0]) << ',' << u[0] << ',' << u[1] << ',' << u[2] << ',' << u[3] << ','
        << csv_safe(p[1]) << ',' << movie->second << '\n';
    ++summary.rows;
    summary.positives += static_cast<std::size_t>(label);
  });
  return summary;
}

}  // namespace dagfm
