#include "promptevo/generator.hpp"

#include <atomic>
#include <thread>

#include "promptevo/png_image.hpp"

namespace promptevo {

std::vector<Violation> validate_params(const GenerationParams& p) {
  std::vector<Violation> out;
  if (p.steps < 1 || p.steps > 150) out.push_back({"", "steps_range", "steps must lie in [1, 150]"});
  if (!(p.guidance_scale > 0.0)) out.push_back({"", "guidance_scale", "guidance_scale must be positive"});
  if (p.width <= 0 || p.width % 8 != 0) out.push_back({"", "width", "width must be a positive multiple of 8"});
  if (p.height <= 0 || p.height % 8 != 0) out.push_back({"", "height", "height must be a positive multiple of 8"});
  return out;
}

ImageRef generate(const Backend& backend, ImageStore& store, const PromptString& prompt, std::int64_t seed,
                  const GenerationParams& params, const RetryPolicy& retry) {
  if (seed < 0 || seed >= kSeedUpperBound)
    throw Error(ErrorCode::invalid_argument, "seed must lie in [0, 2147483647)");
  if (auto v = validate_params(params); !v.empty())
    throw Error(ErrorCode::invalid_argument, "invalid generation params: " + describe(v));

  auto backoff = retry.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      const Bytes png = ensure_png(backend.render(prompt, seed, params));
      ImageRef ref;
      ref.content_hash = store.put(png);
      ref.backend_id = std::string(backend.id());
      ref.prompt_echo = prompt;
      ref.seed = seed;
      return ref;
    } catch (const Error& e) {
      const bool retryable = e.code() == ErrorCode::backend_unreachable || e.code() == ErrorCode::backend_error;
      if (!retryable || attempt >= retry.max_retries) throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

BatchResult generate_population(const Backend& backend, ImageStore& store, std::span<const GenerationItem> items,
                                const GenerationParams& params, std::size_t parallelism, const RetryPolicy& retry) {
  if (items.empty()) throw Error(ErrorCode::invalid_argument, "generate_population needs at least one item");
  if (parallelism == 0) throw Error(ErrorCode::invalid_argument, "parallelism must be positive");

  const std::size_t n = items.size();
  std::vector<std::optional<ImageRef>> images(n);
  std::vector<std::optional<IndexedError>> failures(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        images[i] = generate(backend, store, items[i].prompt, items[i].seed, params, retry);
      } catch (const Error& e) {
        failures[i] = IndexedError{i, e.code(), e.what()};
      } catch (const std::exception& e) {
        failures[i] = IndexedError{i, ErrorCode::backend_error, e.what()};
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t workers = std::min(parallelism, n);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  BatchResult result;
  result.images = std::move(images);
  for (auto& f : failures)
    if (f) result.errors.push_back(std::move(*f));
  if (result.errors.size() == n) {
    const auto& first = result.errors.front();
    throw GenerationFailure(first.code, "every image in the batch failed; first error: " + first.message,
                            result.errors);
  }
  return result;
}

}  // namespace promptevo
