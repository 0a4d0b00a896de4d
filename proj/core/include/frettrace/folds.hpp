#pragma once

#include <string>
#include <vector>

namespace frettrace {

struct FoldSplit {
    int fold = 0;
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
};

/// Player index encoded by a GuitarSet-style track id: the digits before
/// the first underscore ("05_Rock1-130-A_solo" -> 5). Throws on anything
/// that does not map to a player in [0, 5].
int player_of_track(const std::string& track_id);

/// Six folds: fold k tests on player k, validates on player (k+1) mod 6 and
/// trains on the remaining four. Folds partition the whole track list.
std::vector<FoldSplit> player_folds(const std::vector<std::string>& track_ids);

}  // namespace frettrace
