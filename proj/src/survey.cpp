#include "rdsnet/survey.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "rdsnet/csv.hpp"

namespace rdsnet {

namespace {

const std::vector<std::string> kCsvHeader = {
    "respondent_id", "recruiter_coupon", "coupon1", "coupon2", "coupon3",
    "hub_id",        "age_bracket",      "gender",  "race",    "ethnicity",
    "shelter_status", "veteran",         "chronic", "mental_health",
    "substance_use", "disability",       "acq_degree", "friend_degree",
    "kin_degree"};

const std::vector<std::string> kGenderLevels = {"male", "female", "other"};
const std::vector<std::string> kAgeLevels = {"18-24", "25-34", "35-44",
                                             "45-54", "55-64", "65+"};
const std::vector<std::string> kEthnicityLevels = {"hispanic", "non-hispanic"};
const std::vector<std::string> kShelterLevels = {"housed", "sheltered",
                                                 "unsheltered"};

std::optional<std::string> opt_string(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

struct FieldError {
  std::string message;
};

std::optional<bool> parse_flag(const std::string& s, const std::string& col) {
  if (s.empty()) return std::nullopt;
  if (s == "0") return false;
  if (s == "1") return true;
  throw FieldError{col + " must be 0, 1 or empty, got '" + s + "'"};
}

std::optional<int> parse_degree(const std::string& s, const std::string& col) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size() || v < 0) throw FieldError{""};
    return v;
  } catch (...) {
    throw FieldError{col + " must be a nonnegative integer or empty, got '" + s + "'"};
  }
}

void check_level(const std::optional<std::string>& value,
                 const std::vector<std::string>& levels, const std::string& col,
                 int row, std::vector<ValidationIssue>& issues) {
  if (!value) return;
  if (std::find(levels.begin(), levels.end(), *value) == levels.end())
    issues.push_back({row, "unknown " + col + " level '" + *value + "'", true});
}

std::vector<SurveyRecord> parse_csv(std::istream& in,
                                    std::vector<ValidationIssue>& issues) {
  std::vector<SurveyRecord> records;
  std::vector<std::string> row;
  // metadata comment lines ('# ...') written by the toolkit are skipped
  bool have_header = false;
  while (csv::read_row(in, row)) {
    if (!row.empty() && !row[0].empty() && row[0][0] == '#') continue;
    have_header = true;
    break;
  }
  if (!have_header) {
    issues.push_back({0, "empty file: missing header", true});
    return records;
  }
  if (row != kCsvHeader) {
    issues.push_back({0, "header does not match the dataset column contract", true});
    return records;
  }
  int rownum = 0;
  while (csv::read_row(in, row)) {
    ++rownum;
    if (row.size() == 1 && row[0].empty()) continue;  // trailing blank line
    if (!row[0].empty() && row[0][0] == '#') continue;
    if (row.size() != kCsvHeader.size()) {
      issues.push_back({rownum, "expected " + std::to_string(kCsvHeader.size()) +
                                    " fields, got " + std::to_string(row.size()),
                        true});
      continue;
    }
    SurveyRecord r;
    try {
      r.respondent_id = row[0];
      if (r.respondent_id.empty()) throw FieldError{"respondent_id must be nonempty"};
      r.recruiter_coupon = opt_string(row[1]);
      for (int c = 2; c <= 4; ++c)
        if (!row[static_cast<std::size_t>(c)].empty())
          r.own_coupons.push_back(row[static_cast<std::size_t>(c)]);
      r.hub_id = opt_string(row[5]);
      r.age_bracket = opt_string(row[6]);
      r.gender = opt_string(row[7]);
      r.race = opt_string(row[8]);
      r.ethnicity = opt_string(row[9]);
      r.shelter_status = opt_string(row[10]);
      r.veteran = parse_flag(row[11], "veteran");
      r.chronic = parse_flag(row[12], "chronic");
      r.mental_health = parse_flag(row[13], "mental_health");
      r.substance_use = parse_flag(row[14], "substance_use");
      r.disability = parse_flag(row[15], "disability");
      r.acquaintance_degree = parse_degree(row[16], "acq_degree");
      r.close_friend_degree = parse_degree(row[17], "friend_degree");
      r.kinship_degree = parse_degree(row[18], "kin_degree");
    } catch (const FieldError& e) {
      issues.push_back({rownum, e.message, true});
      continue;
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<SurveyRecord> parse_json(std::istream& in, std::string& year_label,
                                     std::optional<int>& file_top_code,
                                     std::vector<ValidationIssue>& issues) {
  std::vector<SurveyRecord> records;
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    issues.push_back({0, std::string("JSON parse failure: ") + e.what(), true});
    return records;
  }
  const nlohmann::json* arr = &doc;
  if (doc.is_object()) {
    if (doc.contains("year_label")) year_label = doc["year_label"].get<std::string>();
    if (doc.contains("top_code")) file_top_code = doc["top_code"].get<int>();
    if (!doc.contains("records")) {
      issues.push_back({0, "JSON object is missing 'records'", true});
      return records;
    }
    arr = &doc["records"];
  }
  if (!arr->is_array()) {
    issues.push_back({0, "expected a JSON array of records", true});
    return records;
  }

  auto get_opt_string = [](const nlohmann::json& o, const char* key) -> std::optional<std::string> {
    if (!o.contains(key) || o[key].is_null()) return std::nullopt;
    return o[key].get<std::string>();
  };
  auto get_opt_flag = [](const nlohmann::json& o, const char* key) -> std::optional<bool> {
    if (!o.contains(key) || o[key].is_null()) return std::nullopt;
    if (o[key].is_boolean()) return o[key].get<bool>();
    int v = o[key].get<int>();
    if (v != 0 && v != 1) throw FieldError{std::string(key) + " must be 0/1/boolean"};
    return v == 1;
  };
  auto get_opt_degree = [](const nlohmann::json& o, const char* key) -> std::optional<int> {
    if (!o.contains(key) || o[key].is_null()) return std::nullopt;
    int v = o[key].get<int>();
    if (v < 0) throw FieldError{std::string(key) + " must be nonnegative"};
    return v;
  };

  int rownum = 0;
  for (const auto& o : *arr) {
    ++rownum;
    SurveyRecord r;
    try {
      r.respondent_id = o.at("respondent_id").get<std::string>();
      r.recruiter_coupon = get_opt_string(o, "recruiter_coupon");
      for (const char* key : {"coupon1", "coupon2", "coupon3"})
        if (auto c = get_opt_string(o, key)) r.own_coupons.push_back(*c);
      if (o.contains("coupons") && o["coupons"].is_array())
        for (const auto& c : o["coupons"]) r.own_coupons.push_back(c.get<std::string>());
      r.hub_id = get_opt_string(o, "hub_id");
      r.age_bracket = get_opt_string(o, "age_bracket");
      r.gender = get_opt_string(o, "gender");
      r.race = get_opt_string(o, "race");
      r.ethnicity = get_opt_string(o, "ethnicity");
      r.shelter_status = get_opt_string(o, "shelter_status");
      r.veteran = get_opt_flag(o, "veteran");
      r.chronic = get_opt_flag(o, "chronic");
      r.mental_health = get_opt_flag(o, "mental_health");
      r.substance_use = get_opt_flag(o, "substance_use");
      r.disability = get_opt_flag(o, "disability");
      r.acquaintance_degree = get_opt_degree(o, "acq_degree");
      r.close_friend_degree = get_opt_degree(o, "friend_degree");
      r.kinship_degree = get_opt_degree(o, "kin_degree");
    } catch (const FieldError& e) {
      issues.push_back({rownum, e.message, true});
      continue;
    } catch (const std::exception& e) {
      issues.push_back({rownum, std::string("bad record: ") + e.what(), true});
      continue;
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<std::string> observed_levels(
    const std::vector<SurveyRecord>& records,
    std::optional<std::string> SurveyRecord::* field) {
  std::set<std::string> seen;
  for (const auto& r : records)
    if (r.*field) seen.insert(*(r.*field));
  return {seen.begin(), seen.end()};
}

}  // namespace

const std::vector<std::string>& dataset_csv_header() { return kCsvHeader; }

LoadResult validate_records(std::vector<SurveyRecord> records, int top_code,
                            OrphanPolicy orphan_policy,
                            const std::string& year_label) {
  LoadResult result;
  auto& issues = result.issues;
  SurveyDataset& ds = result.dataset;
  ds.year_label = year_label;
  ds.top_code = top_code;
  ds.records = std::move(records);

  std::unordered_map<std::string, int> id_row;       // respondent_id -> row
  std::unordered_map<std::string, int> coupon_owner; // coupon -> record index
  for (int i = 0; i < static_cast<int>(ds.records.size()); ++i) {
    const auto& r = ds.records[static_cast<std::size_t>(i)];
    int row = i + 1;
    auto [it, inserted] = id_row.emplace(r.respondent_id, row);
    if (!inserted)
      issues.push_back({row, "duplicate respondent_id '" + r.respondent_id +
                                 "' (also row " + std::to_string(it->second) + ")",
                        true});
    if (r.own_coupons.size() > 3)
      issues.push_back({row, "coupon limit exceeded: " +
                                 std::to_string(r.own_coupons.size()) +
                                 " coupons listed (protocol cap is 3)",
                        true});
    std::set<std::string> own(r.own_coupons.begin(), r.own_coupons.end());
    if (own.size() != r.own_coupons.size())
      issues.push_back({row, "record lists the same coupon twice", true});
    for (const auto& c : r.own_coupons) {
      auto [cit, cinserted] = coupon_owner.emplace(c, i);
      if (!cinserted)
        issues.push_back({row, "duplicate coupon '" + c + "' (also row " +
                                   std::to_string(cit->second + 1) + ")",
                          true});
    }
    if (r.close_friend_degree && *r.close_friend_degree > top_code)
      issues.push_back({row, "friend_degree " + std::to_string(*r.close_friend_degree) +
                                 " exceeds top_code " + std::to_string(top_code),
                        true});
    check_level(r.gender, kGenderLevels, "gender", row, issues);
    check_level(r.age_bracket, kAgeLevels, "age_bracket", row, issues);
    check_level(r.ethnicity, kEthnicityLevels, "ethnicity", row, issues);
    check_level(r.shelter_status, kShelterLevels, "shelter_status", row, issues);
  }

  // Coupon linkage. Each coupon may be redeemed at most once, which also
  // bounds referral out-degree by the coupon cap.
  ds.recruiter_index.assign(ds.records.size(), std::nullopt);
  std::unordered_map<std::string, int> redeemed_by;
  for (int i = 0; i < static_cast<int>(ds.records.size()); ++i) {
    const auto& r = ds.records[static_cast<std::size_t>(i)];
    int row = i + 1;
    if (!r.recruiter_coupon) continue;
    auto it = coupon_owner.find(*r.recruiter_coupon);
    if (it == coupon_owner.end()) {
      if (orphan_policy == OrphanPolicy::reject) {
        issues.push_back({row, "orphan recruiter coupon '" + *r.recruiter_coupon + "'", true});
      } else {
        issues.push_back({row, "orphan recruiter coupon '" + *r.recruiter_coupon +
                                   "': treating respondent as a seed",
                          false});
        ++ds.orphan_count;
      }
      continue;
    }
    if (it->second == i) {
      issues.push_back({row, "record redeems its own coupon", true});
      continue;
    }
    auto [rit, rinserted] = redeemed_by.emplace(*r.recruiter_coupon, row);
    if (!rinserted) {
      issues.push_back({row, "coupon '" + *r.recruiter_coupon +
                                 "' redeemed more than once (also row " +
                                 std::to_string(rit->second) + ")",
                        true});
      continue;
    }
    ds.recruiter_index[static_cast<std::size_t>(i)] = it->second;
  }

  for (const auto& link : ds.recruiter_index)
    if (link) ++ds.records[static_cast<std::size_t>(*link)].referral_out_degree;

  ds.category_dictionaries["gender"] = kGenderLevels;
  ds.category_dictionaries["age_bracket"] = kAgeLevels;
  ds.category_dictionaries["ethnicity"] = kEthnicityLevels;
  ds.category_dictionaries["shelter_status"] = kShelterLevels;
  ds.category_dictionaries["race"] = observed_levels(ds.records, &SurveyRecord::race);
  ds.category_dictionaries["hub_id"] = observed_levels(ds.records, &SurveyRecord::hub_id);
  return result;
}

LoadResult load_dataset_checked(const std::string& path, FileFormat format,
                                int top_code, OrphanPolicy orphan_policy) {
  std::ifstream in(path);
  if (!in) {
    LoadResult r;
    r.issues.push_back({0, "cannot open '" + path + "'", true});
    return r;
  }
  std::vector<ValidationIssue> parse_issues;
  std::vector<SurveyRecord> records;
  std::string year_label;
  int effective_top_code = top_code;
  if (format == FileFormat::csv) {
    records = parse_csv(in, parse_issues);
  } else {
    std::optional<int> file_top_code;
    records = parse_json(in, year_label, file_top_code, parse_issues);
    if (file_top_code) effective_top_code = *file_top_code;
  }
  LoadResult result = validate_records(std::move(records), effective_top_code,
                                       orphan_policy, year_label);
  result.issues.insert(result.issues.begin(), parse_issues.begin(), parse_issues.end());
  return result;
}

SurveyDataset load_dataset(const std::string& path, FileFormat format,
                           int top_code, OrphanPolicy orphan_policy) {
  LoadResult r = load_dataset_checked(path, format, top_code, orphan_policy);
  for (const auto& issue : r.issues)
    if (issue.hard)
      throw DatasetError("row " + std::to_string(issue.row) + ": " + issue.message);
  return std::move(r.dataset);
}

namespace {

std::string flag_field(const std::optional<bool>& b) {
  if (!b) return "";
  return *b ? "1" : "0";
}

std::string degree_field(const std::optional<int>& d) {
  if (!d) return "";
  return std::to_string(*d);
}

nlohmann::json record_to_json(const SurveyRecord& r) {
  nlohmann::json o;
  auto put_string = [&o](const char* key, const std::optional<std::string>& v) {
    o[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  auto put_flag = [&o](const char* key, const std::optional<bool>& v) {
    o[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  auto put_degree = [&o](const char* key, const std::optional<int>& v) {
    o[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  o["respondent_id"] = r.respondent_id;
  put_string("recruiter_coupon", r.recruiter_coupon);
  for (std::size_t c = 0; c < 3; ++c) {
    std::string key = "coupon" + std::to_string(c + 1);
    o[key] = c < r.own_coupons.size() ? nlohmann::json(r.own_coupons[c])
                                      : nlohmann::json(nullptr);
  }
  put_string("hub_id", r.hub_id);
  put_string("age_bracket", r.age_bracket);
  put_string("gender", r.gender);
  put_string("race", r.race);
  put_string("ethnicity", r.ethnicity);
  put_string("shelter_status", r.shelter_status);
  put_flag("veteran", r.veteran);
  put_flag("chronic", r.chronic);
  put_flag("mental_health", r.mental_health);
  put_flag("substance_use", r.substance_use);
  put_flag("disability", r.disability);
  put_degree("acq_degree", r.acquaintance_degree);
  put_degree("friend_degree", r.close_friend_degree);
  put_degree("kin_degree", r.kinship_degree);
  return o;
}

}  // namespace

void save_dataset(const SurveyDataset& ds, std::ostream& out, FileFormat format) {
  if (format == FileFormat::csv) {
    csv::write_row(out, kCsvHeader);
    std::vector<std::string> row(kCsvHeader.size());
    for (const auto& r : ds.records) {
      row[0] = r.respondent_id;
      row[1] = r.recruiter_coupon.value_or("");
      for (std::size_t c = 0; c < 3; ++c)
        row[2 + c] = c < r.own_coupons.size() ? r.own_coupons[c] : "";
      row[5] = r.hub_id.value_or("");
      row[6] = r.age_bracket.value_or("");
      row[7] = r.gender.value_or("");
      row[8] = r.race.value_or("");
      row[9] = r.ethnicity.value_or("");
      row[10] = r.shelter_status.value_or("");
      row[11] = flag_field(r.veteran);
      row[12] = flag_field(r.chronic);
      row[13] = flag_field(r.mental_health);
      row[14] = flag_field(r.substance_use);
      row[15] = flag_field(r.disability);
      row[16] = degree_field(r.acquaintance_degree);
      row[17] = degree_field(r.close_friend_degree);
      row[18] = degree_field(r.kinship_degree);
      csv::write_row(out, row);
    }
  } else {
    nlohmann::json doc;
    doc["year_label"] = ds.year_label;
    doc["top_code"] = ds.top_code;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : ds.records) arr.push_back(record_to_json(r));
    doc["records"] = std::move(arr);
    out << doc.dump(2) << '\n';
  }
  if (!out) throw DatasetError("I/O failure writing dataset");
}

void save_dataset(const SurveyDataset& ds, const std::string& path, FileFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write '" + path + "'");
  save_dataset(ds, out, format);
}

std::vector<ZeroSkipRow> zero_skip_summary(const SurveyDataset& ds) {
  struct Net {
    const char* name;
    std::optional<int> SurveyRecord::* field;
  };
  // Referral out-degree is derived, so it is never missing.
  const Net nets[] = {{"kinship", &SurveyRecord::kinship_degree},
                      {"close_friendship", &SurveyRecord::close_friend_degree},
                      {"acquaintance", &SurveyRecord::acquaintance_degree}};
  std::vector<ZeroSkipRow> rows;
  int total = ds.n();
  for (const auto& net : nets) {
    int nonmissing = 0, zeros = 0;
    for (const auto& r : ds.records) {
      const auto& v = r.*net.field;
      if (v) {
        ++nonmissing;
        if (*v == 0) ++zeros;
      }
    }
    int missing = total - nonmissing;
    double frac = total > 0 ? static_cast<double>(missing + zeros) / total : 0.0;
    rows.push_back({net.name, nonmissing, frac});
  }
  int referral_zeros = 0;
  for (const auto& r : ds.records)
    if (r.referral_out_degree == 0) ++referral_zeros;
  rows.push_back({"referral", total,
                  total > 0 ? static_cast<double>(referral_zeros) / total : 0.0});
  return rows;
}

namespace {

std::optional<double> opt_degree_value(const std::optional<int>& d) {
  if (!d) return std::nullopt;
  return static_cast<double>(*d);
}

std::optional<double> opt_flag_value(const std::optional<bool>& b) {
  if (!b) return std::nullopt;
  return *b ? 1.0 : 0.0;
}

}  // namespace

bool is_known_numeric_variable(const std::string& v) {
  static const std::set<std::string> known = {
      "acquaintance_degree", "acq_degree",     "close_friend_degree",
      "friend_degree",       "kinship_degree", "kin_degree",
      "referral_out_degree", "referral",       "veteran",
      "chronic",             "mental_health",  "substance_use",
      "disability"};
  return known.count(v) > 0 || v.find('=') != std::string::npos;
}

std::optional<double> numeric_value(const SurveyRecord& r, const std::string& variable) {
  if (variable == "acquaintance_degree" || variable == "acq_degree")
    return opt_degree_value(r.acquaintance_degree);
  if (variable == "close_friend_degree" || variable == "friend_degree")
    return opt_degree_value(r.close_friend_degree);
  if (variable == "kinship_degree" || variable == "kin_degree")
    return opt_degree_value(r.kinship_degree);
  if (variable == "referral_out_degree" || variable == "referral")
    return static_cast<double>(r.referral_out_degree);
  if (variable == "veteran") return opt_flag_value(r.veteran);
  if (variable == "chronic") return opt_flag_value(r.chronic);
  if (variable == "mental_health") return opt_flag_value(r.mental_health);
  if (variable == "substance_use") return opt_flag_value(r.substance_use);
  if (variable == "disability") return opt_flag_value(r.disability);
  auto eq = variable.find('=');
  if (eq != std::string::npos) {
    auto value = categorical_value(r, variable.substr(0, eq));
    if (!value) return std::nullopt;
    return *value == variable.substr(eq + 1) ? 1.0 : 0.0;
  }
  throw DatasetError("unknown variable '" + variable + "'");
}

std::optional<std::string> categorical_value(const SurveyRecord& r,
                                             const std::string& attribute) {
  if (attribute == "gender") return r.gender;
  if (attribute == "race") return r.race;
  if (attribute == "age_bracket") return r.age_bracket;
  if (attribute == "ethnicity") return r.ethnicity;
  if (attribute == "shelter_status") return r.shelter_status;
  if (attribute == "hub_id") return r.hub_id;
  throw DatasetError("unknown attribute '" + attribute + "'");
}

}  // namespace rdsnet
