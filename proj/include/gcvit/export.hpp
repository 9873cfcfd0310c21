#pragma once

#include "gcvit/metrics.hpp"
#include "gcvit/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace gcvit {

// File names written by export_results.
inline constexpr char const *kReportFile = "report.csv";
inline constexpr char const *kReportFullFile = "report_full.csv";
inline constexpr char const *kConfusionFile = "confusion.csv";
inline constexpr char const *kPerClassFile = "per_class.csv";
inline constexpr char const *kCurvesFile = "curves.csv";

// Classification report table: `class,precision,recall,f1_score,support`, one row per class, then
// `Accuracy`, `Macro Avg` and `Weighted Avg` rows. Metrics rounded to 2 decimals.
std::string format_report_csv(ClassificationReport const &r);

// Same rows at full (round-trip) precision plus an `undefined` column listing zero-denominator
// metrics separated by ';'.
std::string format_report_full_csv(ClassificationReport const &r);

// Header `true\predicted,<names...>`, then one row per true class.
std::string format_confusion_csv(ConfusionMatrix const &m);
ConfusionMatrix parse_confusion_csv(std::string const &text);
ConfusionMatrix read_confusion_csv(std::filesystem::path const &path);

// `class,accuracy,support,undefined`
std::string format_per_class_csv(ConfusionMatrix const &m);

// `epoch,train_loss,train_accuracy,val_loss,val_accuracy,learning_rate`; also the training log.
std::string format_curves_csv(std::vector<EpochRecord> const &records);
std::string format_curve_line(EpochRecord const &r);
inline constexpr char const *kCurvesHeader = "epoch,train_loss,train_accuracy,val_loss,val_accuracy,learning_rate";

// Human-readable report table for terminals.
std::string format_report_table(ClassificationReport const &r);

void write_text(std::filesystem::path const &path, std::string const &text);

// Writes the five files above into `out_dir` (created if needed). Output is byte-stable.
void export_results(ClassificationReport const &report, ConfusionMatrix const &matrix,
                    std::vector<EpochRecord> const &records, std::filesystem::path const &out_dir);

} // namespace gcvit
