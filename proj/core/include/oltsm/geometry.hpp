#pragma once

#include <Eigen/Core>

namespace oltsm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/*
 * Frame-tagged point. The three frames used by the association pipeline:
 *   camera   - optical frame of the detector (z forward, x right, y down)
 *   body     - robot rigid body frame (x forward, y left, z up)
 *   magnetic - robot-centric frame whose x/y axes are aligned with
 *              magnetic north; z is passed through from the body frame
 */
template <class Frame>
struct FramedPoint
{
    Vec3 v = Vec3::Zero();

    FramedPoint() = default;
    explicit FramedPoint(const Vec3& value) : v(value) { }
    FramedPoint(double x, double y, double z) : v(x, y, z) { }

    double x() const { return v.x(); }
    double y() const { return v.y(); }
    double z() const { return v.z(); }

    bool operator==(const FramedPoint&) const = default;
};

struct CameraFrame;
struct BodyFrame;
struct MagneticFrame;

using CameraPoint = FramedPoint<CameraFrame>;
using BodyPoint = FramedPoint<BodyFrame>;
using MagneticPoint = FramedPoint<MagneticFrame>;

/* Robot heading against magnetic north in degrees, normalized to [0, 360).
 * Clockwise-positive: a robot with heading h moves along
 * (cos h, -sin h) in the magnetic x/y plane. */
class YawDeg
{
public:
    YawDeg() = default;
    explicit YawDeg(double degrees);

    double degrees() const { return mDegrees; }
    double radians() const;

    bool operator==(const YawDeg&) const = default;

private:
    double mDegrees = 0.0;
};

/* Wraps an angle in degrees into [0, 360) */
double NormalizeDegrees(double degrees);

/* Camera to body rigid transform. Rotation must be orthonormal with
 * determinant +1 (checked to 1e-9); throws InvalidArgument otherwise. */
class Extrinsics
{
public:
    Extrinsics();
    Extrinsics(const Mat3& rotation, const Vec3& translation);

    static Extrinsics Identity() { return Extrinsics(); }

    const Mat3& rotation() const { return mRotation; }
    const Vec3& translation() const { return mTranslation; }

    /* Body point back to the camera frame, R^T (p - T) */
    CameraPoint Inverse(const BodyPoint& p) const;

private:
    Mat3 mRotation;
    Vec3 mTranslation;
};

/* R p + T */
BodyPoint CameraToBody(const CameraPoint& p, const Extrinsics& ext);

/* Planar yaw rotation:
 *   x' = x cos(yaw) + y sin(yaw)
 *   y' = y cos(yaw) - x sin(yaw)
 *   z' = z */
MagneticPoint BodyToMagnetic(const BodyPoint& p, YawDeg yaw);

/* Exact inverse of BodyToMagnetic */
BodyPoint MagneticToBody(const MagneticPoint& p, YawDeg yaw);

/* b - a */
Vec3 RelativeDirection(const MagneticPoint& a, const MagneticPoint& b);

/* Heading of a magnetic-frame vector under the clockwise convention,
 * atan2(-y, x) in degrees in [0, 360). The zero vector has heading 0. */
double PlanarHeadingDeg(const Vec3& v);

/*
 * Magnetic-frame landmark propagation. Landmark N1 was seen at mn11 (t1)
 * and again at mn12 (t2); landmark N2 was seen at mn21 (t1) only.
 * Since static landmark pairs keep their magnetic-frame offset, N2 at t2
 * lies at mn12 + (mn21 - mn11).
 */
MagneticPoint PropagateMagnetic(const MagneticPoint& mn11,
                                const MagneticPoint& mn21,
                                const MagneticPoint& mn12);

/*
 * Full robot-centric association for a single landmark pair: recovers the
 * body-frame position of N2 at t2 given camera observations cn11, cn21
 * (both at t1) and cn12 (N1 at t2), the camera extrinsics and the headings.
 */
BodyPoint PropagateLandmark(const CameraPoint& cn11,
                            const CameraPoint& cn21,
                            const CameraPoint& cn12,
                            const Extrinsics& ext,
                            YawDeg yaw1,
                            YawDeg yaw2);

} // namespace oltsm
