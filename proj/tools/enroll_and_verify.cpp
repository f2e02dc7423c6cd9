// Library walk-through: enroll a synthetic room, store the template, verify
// a moved and cropped rescan plus a different room against it.

#include <cstdio>
#include <numbers>

#include "issauth/issauth.hpp"

using namespace issauth;

int main() {
  const PipelineConfig config = PipelineConfig::for_profile(Profile::kp2);

  const PointCloud room = generate_room(random_room_spec(42));
  const Template tmpl = enroll(room, config);
  const auto bytes = serialize_template(tmpl);
  std::printf("enrolled %zu raw points as %zu keypoints (%zu bytes, reduction %.3f)\n", room.size(), tmpl.size(),
              bytes.size(), data_reduction_rate(room.size(), tmpl.size()));

  // What the server holds after a round trip through storage.
  const Template stored = deserialize_template(bytes);

  const RigidTransform moved = axis_angle_transform(Vector3::UnitZ(), std::numbers::pi / 8, Vector3(0.8, -0.4, 0.0));
  const PointCloud rescan = perturb_scan(room, moved, 0.01, 0.2, 7);
  const PointCloud elsewhere = generate_room(random_room_spec(43));

  for (const auto& [name, probe] : {std::pair{"rescan", &rescan}, std::pair{"other room", &elsewhere}}) {
    const AuthDecision d = verify(stored, *probe, config);
    std::printf("%-10s similarity %.3f (%zu/%zu) -> %s\n", name, d.similarity, d.matched_count, d.template_count,
                d.accepted ? "accept" : "reject");
  }
  return 0;
}
