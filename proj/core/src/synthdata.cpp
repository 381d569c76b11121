#include "obfair/synthdata.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "obfair/codec.hpp"
#include "obfair/rng.hpp"

namespace obfair {

namespace fs = std::filesystem;

ImageBuffer synthetic_noise_image(std::uint64_t seed, int width, int height, int channels) {
    ImageBuffer img(width, height, channels);
    SplitMix64 rng(seed);
    for (auto& px : img.data) px = static_cast<std::uint8_t>(rng.next() & 0xFF);
    return img;
}

std::string write_synthetic_cohort(const SyntheticCohortSpec& spec) {
    if (spec.identities < 2) throw ConfigError("cohort needs at least 2 identities");
    if (spec.images_per_identity < 2)
        throw ConfigError("cohort needs at least 2 images per identity");
    fs::create_directories(spec.directory);
    fs::create_directories(fs::path(spec.directory) / "images");

    const std::string manifest_path = (fs::path(spec.directory) / "manifest.csv").string();
    std::ofstream manifest(manifest_path, std::ios::trunc);
    if (!manifest) throw ConfigError("cannot write manifest: " + manifest_path);
    manifest << "image_id,file_path,md5,identity_id,gender,race\n";

    static const char* genders[2] = {"male", "female"};
    static const char* races[2] = {"white", "non_white"};
    char id_buf[32];
    for (int p = 0; p < spec.identities; ++p) {
        std::snprintf(id_buf, sizeof(id_buf), "person%03d", p);
        const std::string identity = id_buf;
        const char* gender = genders[p % 2];
        const char* race = races[(p / 2) % 2];
        for (int i = 0; i < spec.images_per_identity; ++i) {
            char img_buf[48];
            std::snprintf(img_buf, sizeof(img_buf), "%s_img%03d", id_buf, i);
            const std::string image_id = img_buf;
            const std::string rel = "images/" + image_id + ".png";
            const std::string path = (fs::path(spec.directory) / rel).string();
            ImageBuffer img = synthetic_noise_image(mix64(spec.seed, fnv1a64(image_id)),
                                                    spec.image_size, spec.image_size);
            write_png_file(path, img);
            // Fake md5: the manifest carries checksums opaquely, so a seeded
            // unique 32-hex string is enough for dedup semantics.
            char md5_buf[33];
            std::uint64_t a = mix64(spec.seed, fnv1a64("md5:" + image_id));
            std::uint64_t b = mix64(a, 0x9e3779b97f4a7c15ULL);
            std::snprintf(md5_buf, sizeof(md5_buf), "%016llx%016llx",
                          static_cast<unsigned long long>(a), static_cast<unsigned long long>(b));
            manifest << image_id << ',' << path << ',' << md5_buf << ',' << identity << ','
                     << gender << ',' << race << '\n';
        }
    }
    manifest.close();
    return manifest_path;
}

} // namespace obfair
