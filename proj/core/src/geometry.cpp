#include "oltsm/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/LU>

#include "oltsm/error.hpp"

namespace oltsm {

namespace {

constexpr double kRotationTolerance = 1e-9;

bool AllFinite(const Vec3& v)
{
    return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

} // namespace

double NormalizeDegrees(double degrees)
{
    if (!std::isfinite(degrees))
        throw InvalidArgument("yaw must be finite");

    double wrapped = std::fmod(degrees, 360.0);
    if (wrapped < 0.0)
        wrapped += 360.0;
    /* fmod of a tiny negative number plus 360 rounds to 360 */
    if (wrapped >= 360.0)
        wrapped = 0.0;
    return wrapped;
}

YawDeg::YawDeg(double degrees) :
    mDegrees(NormalizeDegrees(degrees))
{
}

double YawDeg::radians() const
{
    return this->mDegrees * std::numbers::pi / 180.0;
}

Extrinsics::Extrinsics() :
    mRotation(Mat3::Identity()),
    mTranslation(Vec3::Zero())
{
}

Extrinsics::Extrinsics(const Mat3& rotation, const Vec3& translation) :
    mRotation(rotation),
    mTranslation(translation)
{
    if (!rotation.allFinite() || !AllFinite(translation))
        throw InvalidArgument("invalid extrinsics: non-finite entries");

    const double orthoError =
        (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (orthoError > kRotationTolerance)
        throw InvalidArgument("invalid extrinsics: rotation is not orthonormal "
                              "(max |R R^T - I| = " + std::to_string(orthoError) + ")");

    if (std::abs(rotation.determinant() - 1.0) > kRotationTolerance)
        throw InvalidArgument("invalid extrinsics: rotation determinant is not +1");
}

CameraPoint Extrinsics::Inverse(const BodyPoint& p) const
{
    return CameraPoint(this->mRotation.transpose() * (p.v - this->mTranslation));
}

BodyPoint CameraToBody(const CameraPoint& p, const Extrinsics& ext)
{
    return BodyPoint(ext.rotation() * p.v + ext.translation());
}

MagneticPoint BodyToMagnetic(const BodyPoint& p, YawDeg yaw)
{
    const double c = std::cos(yaw.radians());
    const double s = std::sin(yaw.radians());
    return MagneticPoint(p.x() * c + p.y() * s,
                         p.y() * c - p.x() * s,
                         p.z());
}

BodyPoint MagneticToBody(const MagneticPoint& p, YawDeg yaw)
{
    const double c = std::cos(yaw.radians());
    const double s = std::sin(yaw.radians());
    return BodyPoint(p.x() * c - p.y() * s,
                     p.y() * c + p.x() * s,
                     p.z());
}

Vec3 RelativeDirection(const MagneticPoint& a, const MagneticPoint& b)
{
    return b.v - a.v;
}

double PlanarHeadingDeg(const Vec3& v)
{
    if (v.x() == 0.0 && v.y() == 0.0)
        return 0.0;
    return NormalizeDegrees(std::atan2(-v.y(), v.x()) * 180.0 / std::numbers::pi);
}

MagneticPoint PropagateMagnetic(const MagneticPoint& mn11,
                                const MagneticPoint& mn21,
                                const MagneticPoint& mn12)
{
    const Vec3 d = RelativeDirection(mn11, mn21);
    return MagneticPoint(mn12.v + d);
}

BodyPoint PropagateLandmark(const CameraPoint& cn11,
                            const CameraPoint& cn21,
                            const CameraPoint& cn12,
                            const Extrinsics& ext,
                            YawDeg yaw1,
                            YawDeg yaw2)
{
    const BodyPoint bn11 = CameraToBody(cn11, ext);
    const BodyPoint bn21 = CameraToBody(cn21, ext);
    const BodyPoint bn12 = CameraToBody(cn12, ext);

    const MagneticPoint mn11 = BodyToMagnetic(bn11, yaw1);
    const MagneticPoint mn21 = BodyToMagnetic(bn21, yaw1);
    const MagneticPoint mn12 = BodyToMagnetic(bn12, yaw2);

    const MagneticPoint mn22 = PropagateMagnetic(mn11, mn21, mn12);
    return MagneticToBody(mn22, yaw2);
}

} // namespace oltsm
