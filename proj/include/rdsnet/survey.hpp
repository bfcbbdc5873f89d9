#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdsnet {

/// One respondent row from a peer-referral survey. Missing (skip) answers
/// are nullopt throughout and are distinct from explicit zeros.
struct SurveyRecord {
  std::string respondent_id;
  std::optional<std::string> recruiter_coupon;
  std::vector<std::string> own_coupons;  // at most 3, globally unique
  std::optional<std::string> hub_id;
  std::optional<std::string> age_bracket;
  std::optional<std::string> gender;
  std::optional<std::string> race;
  std::optional<std::string> ethnicity;
  std::optional<std::string> shelter_status;
  std::optional<bool> veteran;
  std::optional<bool> chronic;
  std::optional<bool> mental_health;
  std::optional<bool> substance_use;
  std::optional<bool> disability;
  std::optional<int> acquaintance_degree;
  std::optional<int> close_friend_degree;  // <= dataset top_code
  std::optional<int> kinship_degree;
  int referral_out_degree = 0;  // derived from coupon matching, <= 3

  bool operator==(const SurveyRecord&) const = default;
};

enum class OrphanPolicy { reject, seed };
enum class FileFormat { csv, json };

struct SurveyDataset {
  std::string year_label;
  int top_code = 20;
  std::vector<SurveyRecord> records;
  std::map<std::string, std::vector<std::string>> category_dictionaries;

  // resolved recruiter linkage: index into records, nullopt for seeds
  std::vector<std::optional<int>> recruiter_index;
  int orphan_count = 0;  // recruiter coupons that matched nothing (policy=seed)

  int n() const { return static_cast<int>(records.size()); }
  bool is_seed(int i) const { return !recruiter_index[static_cast<std::size_t>(i)].has_value(); }
};

struct ValidationIssue {
  int row;  // 1-based data row; 0 when not row-specific
  std::string message;
  bool hard;
};

struct LoadResult {
  SurveyDataset dataset;
  std::vector<ValidationIssue> issues;
  bool ok() const {
    for (const auto& i : issues)
      if (i.hard) return false;
    return true;
  }
};

class DatasetError : public std::runtime_error {
 public:
  explicit DatasetError(const std::string& what) : std::runtime_error(what) {}
};

/// Parses and validates; hard violations are collected instead of thrown.
LoadResult load_dataset_checked(const std::string& path, FileFormat format,
                                int top_code, OrphanPolicy orphan_policy);

/// Throwing variant: returns a fully valid dataset or raises DatasetError
/// with the first hard violation.
SurveyDataset load_dataset(const std::string& path, FileFormat format,
                           int top_code, OrphanPolicy orphan_policy);

/// Validates in-memory records (used by generators and round-trip checks).
LoadResult validate_records(std::vector<SurveyRecord> records, int top_code,
                            OrphanPolicy orphan_policy,
                            const std::string& year_label = "");

void save_dataset(const SurveyDataset& ds, const std::string& path, FileFormat format);
void save_dataset(const SurveyDataset& ds, std::ostream& out, FileFormat format);

/// The canonical CSV header, in the exact on-disk column order.
const std::vector<std::string>& dataset_csv_header();

struct ZeroSkipRow {
  std::string network;          // kinship, close_friendship, acquaintance, referral
  int n_nonmissing;
  double fraction_zero_or_skip; // (missing + explicit zeros) / record count
};

std::vector<ZeroSkipRow> zero_skip_summary(const SurveyDataset& ds);

/// Numeric view of a record field. Degree names accept both the long form
/// ("close_friend_degree") and the CSV column form ("friend_degree"); flags
/// map to 0/1; "attr=level" yields a membership indicator.
std::optional<double> numeric_value(const SurveyRecord& r, const std::string& variable);

std::optional<std::string> categorical_value(const SurveyRecord& r,
                                             const std::string& attribute);

bool is_known_numeric_variable(const std::string& variable);

}  // namespace rdsnet
