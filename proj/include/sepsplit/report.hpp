#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "sepsplit/inner.hpp"
#include "sepsplit/melnikov.hpp"
#include "sepsplit/splitting.hpp"

namespace sepsplit {

nlohmann::json complex_to_json(const BigComplex& z, int digits = 20);
nlohmann::json separatrix_to_json(const SeparatrixInfo& info);
nlohmann::json regime_to_json(const RegimeReport& r);
nlohmann::json constants_to_json(const AsymptoticConstants& c);
nlohmann::json melnikov_to_json(const MelnikovCoefficient& m);
nlohmann::json stokes_to_json(const StokesData& s);
nlohmann::json measurement_to_json(const SplittingMeasurement& m);
nlohmann::json fit_to_json(const FitResult& f);

// Sweep CSV: eps,area,est_error,bits,seconds
void write_sweep_header(std::ostream& os);
void write_sweep_row(std::ostream& os, const SweepRow& row);
std::vector<SweepRow> read_sweep_csv(const std::string& path);

// Prediction CSV: eps,area_pred,formula_id,caveats
void write_prediction_header(std::ostream& os);
void write_prediction_row(std::ostream& os, const LobeAreaPrediction& p);

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool line = true;  // false: markers only
  std::string color = "#1f77b4";
};

// Minimal line plot; axes carry already-transformed (e.g. log) values.
std::string svg_plot(const std::vector<PlotSeries>& series, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, int width = 720, int height = 480);

}  // namespace sepsplit
