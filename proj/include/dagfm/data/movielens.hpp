#pragma once

#include <cstddef>
#include <filesystem>

namespace dagfm {

struct MovieLensSummary {
  std::size_t rows = 0;
  std::size_t positives = 0;
};

// Converts the MovieLens-1M `::`-separated files (ratings.dat, users.dat,
// movies.dat in `source_dir`) into a CTR CSV with seven fields:
// user_id, gender, age, occupation, zip, movie_id, genre.
// The label is rating >= 4; `genre` is the first listed genre of the movie.
MovieLensSummary convert_movielens(const std::filesystem::path& source_dir, const std::filesystem::path& csv_out);

}  // namespace dagfm
