#include "frettrace/folds.hpp"

#include <cctype>
#include <stdexcept>

namespace frettrace {

int player_of_track(const std::string& track_id) {
    const auto underscore = track_id.find('_');
    if (underscore == std::string::npos || underscore == 0) {
        throw std::invalid_argument("track id does not encode a player: " + track_id);
    }
    const std::string prefix = track_id.substr(0, underscore);
    for (char c : prefix) {
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            throw std::invalid_argument("track id does not encode a player: " + track_id);
        }
    }
    const int player = std::stoi(prefix);
    if (player < 0 || player > 5) {
        throw std::invalid_argument("unknown player " + prefix + " in track id " + track_id);
    }
    return player;
}

std::vector<FoldSplit> player_folds(const std::vector<std::string>& track_ids) {
    std::vector<std::vector<std::string>> by_player(6);
    for (const auto& id : track_ids) {
        by_player[static_cast<std::size_t>(player_of_track(id))].push_back(id);
    }

    std::vector<FoldSplit> folds(6);
    for (int k = 0; k < 6; ++k) {
        folds[k].fold = k;
        const int val_player = (k + 1) % 6;
        for (int p = 0; p < 6; ++p) {
            auto& dst = p == k            ? folds[k].test
                        : p == val_player ? folds[k].validation
                                          : folds[k].train;
            dst.insert(dst.end(), by_player[p].begin(), by_player[p].end());
        }
    }
    return folds;
}

}  // namespace frettrace
