"""Regenerates tests/fixtures/solar_atlanta.csv.

Two independent references per instant:
  * NOAA spreadsheet algorithm (Meeus Julian-century formulation, the one
    behind the NOAA online solar calculator), apparent elevation with the
    calculator's refraction correction;
  * NREL SPA via pvlib (apparent elevation).
The C++ implementation uses the fractional-year formulation, so neither
reference shares its code path.
"""
import math
import sys

import pandas as pd
import pvlib

LAT, LON = 33.7490, -84.3880
INSTANTS = [
    "2016-03-20 17:30",  # spring, near local noon
    "2016-04-15 13:00",  # spring morning
    "2016-06-21 16:00",  # summer solstice
    "2016-06-21 22:30",  # summer evening
    "2016-06-21 05:00",  # summer night
    "2016-09-22 20:00",  # fall afternoon
    "2016-10-30 15:00",  # fall morning
    "2016-12-21 17:30",  # winter solstice noon
    "2017-01-15 20:30",  # winter afternoon
    "2017-02-01 03:00",  # winter night
]


def noaa(ts):
    jd = ts.to_julian_date()
    jc = (jd - 2451545.0) / 36525.0
    geom_mean_long = (280.46646 + jc * (36000.76983 + jc * 0.0003032)) % 360
    geom_mean_anom = 357.52911 + jc * (35999.05029 - 0.0001537 * jc)
    ecc = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc)
    m = math.radians(geom_mean_anom)
    eq_ctr = (math.sin(m) * (1.914602 - jc * (0.004817 + 0.000014 * jc))
              + math.sin(2 * m) * (0.019993 - 0.000101 * jc)
              + math.sin(3 * m) * 0.000289)
    true_long = geom_mean_long + eq_ctr
    omega = 125.04 - 1934.136 * jc
    app_long = true_long - 0.00569 - 0.00478 * math.sin(math.radians(omega))
    mean_obliq = 23 + (26 + ((21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813)))) / 60) / 60
    obliq = mean_obliq + 0.00256 * math.cos(math.radians(omega))
    decl = math.degrees(math.asin(math.sin(math.radians(obliq)) * math.sin(math.radians(app_long))))
    y = math.tan(math.radians(obliq / 2)) ** 2
    l0 = math.radians(geom_mean_long)
    eot = 4 * math.degrees(y * math.sin(2 * l0) - 2 * ecc * math.sin(m)
                           + 4 * ecc * y * math.sin(m) * math.cos(2 * l0)
                           - 0.5 * y * y * math.sin(4 * l0) - 1.25 * ecc * ecc * math.sin(2 * m))
    minutes = ts.hour * 60 + ts.minute + ts.second / 60
    tst = (minutes + eot + 4 * LON) % 1440
    ha = tst / 4 + 180 if tst / 4 < 0 else tst / 4 - 180
    lat, d, h = math.radians(LAT), math.radians(decl), math.radians(ha)
    zen = math.degrees(math.acos(math.sin(lat) * math.sin(d) + math.cos(lat) * math.cos(d) * math.cos(h)))
    elev = 90 - zen
    if elev > 85:
        refr = 0.0
    elif elev > 5:
        t = math.tan(math.radians(elev))
        refr = 58.1 / t - 0.07 / t ** 3 + 0.000086 / t ** 5
    elif elev > -0.575:
        refr = 1735 + elev * (-518.2 + elev * (103.4 + elev * (-12.79 + elev * 0.711)))
    else:
        refr = -20.772 / math.tan(math.radians(elev))
    refr /= 3600
    zr = math.radians(zen)
    cos_az = ((math.sin(lat) * math.cos(zr)) - math.sin(d)) / (math.cos(lat) * math.sin(zr))
    cos_az = max(-1.0, min(1.0, cos_az))
    if ha > 0:
        az = (math.degrees(math.acos(cos_az)) + 180) % 360
    else:
        az = (540 - math.degrees(math.acos(cos_az))) % 360
    return az, elev + refr


def main():
    out = sys.stdout
    out.write("timestamp_utc,noaa_azimuth,noaa_altitude,spa_azimuth,spa_altitude\n")
    for s in INSTANTS:
        ts = pd.Timestamp(s, tz="UTC")
        az, alt = noaa(ts)
        spa = pvlib.solarposition.spa_python(pd.DatetimeIndex([ts]), LAT, LON)
        out.write(f"{ts.strftime('%Y-%m-%dT%H:%M:%SZ')},{az:.4f},{alt:.4f},"
                  f"{spa['azimuth'].iloc[0]:.4f},{spa['apparent_elevation'].iloc[0]:.4f}\n")


if __name__ == "__main__":
    main()
