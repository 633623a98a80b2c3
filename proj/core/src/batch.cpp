// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/batch.hpp"

#include <algorithm>
#include <numeric>

#include "cipherpix/common.hpp"
#include "cipherpix/parallel.hpp"
#include "cipherpix/png_io.hpp"
#include "cipherpix/rng.hpp"

namespace cipherpix {

DataStore DataStore::load(const Manifest& manifest, const std::string& split,
                          const Tokenizer& tokenizer, int max_target_len) {
    const auto entries = manifest.split_entries(split);
    require(!entries.empty(), "datastore: split '" + split + "' is empty");

    DataStore store;
    store.line_height_ = manifest.line_height;
    store.samples_.resize(entries.size());
    parallel_for(static_cast<int64_t>(entries.size()), [&](int64_t i) {
        const ManifestEntry& e = *entries[static_cast<size_t>(i)];
        Sample s;
        s.line_id = e.line_id;
        s.plaintext = e.plaintext;
        s.image = read_png_gray(manifest.resolve(e).string());
        if (s.image.height != manifest.line_height) {
            s.image = resize_to_height(s.image, manifest.line_height);
        }
        s.target = tokenizer.encode(e.plaintext);
        if (static_cast<int>(s.target.size()) > max_target_len) {
            throw InvalidArgument("datastore: target for line '" + e.line_id + "' has " +
                                  std::to_string(s.target.size()) + " tokens, exceeding max " +
                                  std::to_string(max_target_len));
        }
        store.samples_[static_cast<size_t>(i)] = std::move(s);
    });
    for (const auto& s : store.samples_) {
        store.max_width_ = std::max(store.max_width_, s.image.width);
    }
    return store;
}

std::vector<std::vector<int>> make_batch_plan(const std::vector<int>& widths, int batch_size,
                                              uint64_t seed, bool bucket_by_width) {
    require(batch_size >= 1, "batch: batch_size must be >= 1");
    const int n = static_cast<int>(widths.size());
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 0x6261746368ull));
    rng.shuffle(order);
    if (bucket_by_width) {
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return widths[static_cast<size_t>(a)] < widths[static_cast<size_t>(b)];
        });
    }
    std::vector<std::vector<int>> plan;
    for (int start = 0; start < n; start += batch_size) {
        const int end = std::min(n, start + batch_size);
        plan.emplace_back(order.begin() + start, order.begin() + end);
    }
    if (bucket_by_width) {
        rng.shuffle(plan);
    }
    return plan;
}

Batch materialize_batch(const DataStore& store, const std::vector<int>& indices) {
    require(!indices.empty(), "batch: empty index list");
    Batch b;
    b.size = static_cast<int>(indices.size());
    b.height = store.line_height();
    b.sample_indices = indices;
    for (int idx : indices) {
        const auto& s = store.samples()[static_cast<size_t>(idx)];
        b.max_width = std::max(b.max_width, s.image.width);
        b.max_target_len = std::max(b.max_target_len, static_cast<int>(s.target.size()));
        b.widths.push_back(s.image.width);
        b.target_lens.push_back(static_cast<int>(s.target.size()));
    }
    b.images.assign(static_cast<size_t>(b.size) * b.height * b.max_width, 1.0f);
    b.targets.assign(static_cast<size_t>(b.size) * b.max_target_len, Tokenizer::kPad);
    for (int s = 0; s < b.size; ++s) {
        const auto& sample = store.samples()[static_cast<size_t>(indices[static_cast<size_t>(s)])];
        float* dst = b.images.data() + static_cast<size_t>(s) * b.height * b.max_width;
        for (int r = 0; r < b.height; ++r) {
            std::copy_n(sample.image.px.data() + static_cast<size_t>(r) * sample.image.width,
                        sample.image.width, dst + static_cast<size_t>(r) * b.max_width);
        }
        std::copy(sample.target.begin(), sample.target.end(),
                  b.targets.begin() + static_cast<size_t>(s) * b.max_target_len);
    }
    return b;
}

int64_t padded_pixel_count(const std::vector<int>& widths, int height,
                           const std::vector<std::vector<int>>& plan) {
    int64_t total = 0;
    for (const auto& batch : plan) {
        int maxw = 0;
        for (int idx : batch) {
            maxw = std::max(maxw, widths[static_cast<size_t>(idx)]);
        }
        for (int idx : batch) {
            total += static_cast<int64_t>(maxw - widths[static_cast<size_t>(idx)]) * height;
        }
    }
    return total;
}

}  // namespace cipherpix
