#include "safetriage/workflow.hpp"

#include <fstream>

#include "safetriage/error.hpp"
#include "safetriage/rng.hpp"

namespace safetriage {

std::vector<double> ModelBundle::score(const std::vector<Document>& docs, Execution exec) const {
  if (docs.empty()) return {};
  return model.score_batch(pipeline.transform(docs, exec), exec);
}

std::vector<ScoredDocument> ModelBundle::score_documents(const std::vector<Document>& docs, Execution exec) const {
  const auto s = score(docs, exec);
  std::vector<ScoredDocument> out;
  out.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) out.push_back({docs[i].id, docs[i].text, s[i]});
  return out;
}

nlohmann::json ModelBundle::to_json() const {
  return {{"format_version", kBundleFormatVersion},
          {"master_seed", master_seed},
          {"pipeline", pipeline.to_json()},
          {"model", model.to_json()}};
}

ModelBundle ModelBundle::from_json(const nlohmann::json& j, std::shared_ptr<const Lexicon> lexicon) {
  if (j.at("format_version").get<int>() != kBundleFormatVersion) {
    throw FormatError("unsupported model format version " + j.at("format_version").dump());
  }
  ModelBundle b{FittedPipeline::from_json(j.at("pipeline"), std::move(lexicon)),
                TrainedModel::from_json(j.at("model")), j.at("master_seed").get<std::uint64_t>()};
  if (b.model.width() != b.pipeline.width()) throw FormatError("model width disagrees with the selection mask");
  return b;
}

void ModelBundle::save(const std::filesystem::path& path) const {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IngestError("cannot write " + tmp);
    out << to_json().dump();
    if (!out) throw IngestError("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

ModelBundle ModelBundle::load(const std::filesystem::path& path, std::shared_ptr<const Lexicon> lexicon) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read model " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  return from_json(j, std::move(lexicon));
}

ModelBundle train_bundle(const std::vector<Document>& docs, const TrainConfig& config,
                         std::shared_ptr<const Lexicon> lexicon, SmokeList smoke, Execution exec) {
  auto pc = config.pipeline;
  pc.seed = derive_seed(config.master_seed, 10);
  auto spec = config.spec;
  spec.seed = derive_seed(config.master_seed, 11);
  Matrix x;
  auto pipeline = fit_pipeline(docs, pc, std::move(lexicon), std::move(smoke), nullptr, exec, &x);
  auto model = train(spec, x, label_values(docs), exec);
  return {std::move(pipeline), std::move(model), config.master_seed};
}

}  // namespace safetriage
