"""Independent sunrise/sunset oracle: the classic almanac-for-computers recipe.

Different formulation from the package (mean anomaly and ecliptic longitude
instead of the fractional-year series), so agreement is a real cross-check.
"""
import math


def almanac_event_utc(lat, lon, day_of_year, rising, zenith=90.833):
    lng_hour = lon / 15.0
    t = day_of_year + ((6 if rising else 18) - lng_hour) / 24.0
    m = 0.9856 * t - 3.289
    l = (m + 1.916 * math.sin(math.radians(m)) + 0.020 * math.sin(math.radians(2 * m)) + 282.634) % 360
    ra = math.degrees(math.atan(0.91764 * math.tan(math.radians(l)))) % 360
    ra += (l // 90) * 90 - (ra // 90) * 90
    ra /= 15.0
    sin_dec = 0.39782 * math.sin(math.radians(l))
    cos_dec = math.cos(math.asin(sin_dec))
    cos_h = (math.cos(math.radians(zenith)) - sin_dec * math.sin(math.radians(lat))) / (
        cos_dec * math.cos(math.radians(lat)))
    if not -1 <= cos_h <= 1:
        return None
    h = math.degrees(math.acos(cos_h))
    h = (360 - h if rising else h) / 15.0
    local_mean = h + ra - 0.06571 * t - 6.622
    return (local_mean - lng_hour) % 24
