#ifndef RRNN_DATASET_HPP_
#define RRNN_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rrnn/linalg.hpp"

namespace rrnn {

// One line of a feature file:
//
//   <sample_id> <subject_label> <tag> <d decimals>
//
// For pose data `sample_id` names one capture set of a subject and `tag` is
// the pose index 0..6. For video data `sample_id` names a track and `tag` is
// the frame ordinal.
struct FeatureRecord {
    std::string sample_id;
    std::string subject;
    std::int64_t tag = 0;
    Vector feature;

    friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

struct FeatureTable {
    std::size_t dim = 0;
    std::vector<FeatureRecord> records;

    friend bool operator==(const FeatureTable&, const FeatureTable&) = default;
};

inline constexpr const char* kFeatureHeader = "rrnn-features v1";

// Decimal text with 17 significant digits; parses back to the same double.
std::string format_real(double value);
double parse_real(const std::string& token);

void write_features(std::ostream& out, const FeatureTable& table);
// Rejects malformed input with the 1-based line number in the message.
FeatureTable read_features(std::istream& in);

void save_features(const std::string& path, const FeatureTable& table);
FeatureTable load_features(const std::string& path);

}  // namespace rrnn

#endif  // RRNN_DATASET_HPP_
