use std::io::{Read, Write};
use std::path::Path;

use sphdecon_core::geom::SpherePoint;

use crate::error::{CliError, CliResult};

/// Converts longitude/latitude in degrees to a point on `S^2` with
/// colatitude `90 - lat` and azimuth `lon`.
pub fn lonlat_to_point(lon: f64, lat: f64) -> CliResult<SpherePoint> {
    if !lon.is_finite() || !(-90.0..=90.0).contains(&lat) {
        return Err(CliError::Input(format!(
            "invalid coordinates lon={lon}, lat={lat}"
        )));
    }
    let phi = lon.rem_euclid(360.0).to_radians();
    let phi = if phi >= std::f64::consts::TAU {
        0.0
    } else {
        phi
    };
    let theta = (90.0 - lat).to_radians().clamp(0.0, std::f64::consts::PI);
    SpherePoint::from_angles(2, phi, &[theta]).map_err(|e| CliError::Input(e.to_string()))
}

/// Inverse of [`lonlat_to_point`].
pub fn point_to_lonlat(x: &SpherePoint) -> (f64, f64) {
    (x.phi().to_degrees(), 90.0 - x.thetas()[0].to_degrees())
}

/// Observations read from a `lon,lat[,y]` CSV.
#[derive(Debug, Clone)]
pub struct Observations {
    pub points: Vec<SpherePoint>,
    pub y: Option<Vec<f64>>,
}

pub fn read_observations<R: Read>(reader: R, need_y: bool) -> CliResult<Observations> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("cannot read header: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("missing column `{name}`")))
    };
    let (ilon, ilat) = (col("lon")?, col("lat")?);
    let iy = if need_y { Some(col("y")?) } else { None };
    let mut points = Vec::new();
    let mut y = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| CliError::Input(format!("line {line}: {e}")))?;
        let field = |i: usize, name: &str| -> CliResult<f64> {
            let raw = rec.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    CliError::Input(format!("line {line}: invalid `{name}` value `{raw}`"))
                })
        };
        let p = lonlat_to_point(field(ilon, "lon")?, field(ilat, "lat")?)
            .map_err(|e| CliError::Input(format!("line {line}: {e}")))?;
        points.push(p);
        if let Some(iy) = iy {
            y.push(field(iy, "y")?);
        }
    }
    if points.is_empty() {
        return Err(CliError::Input("no observations".to_string()));
    }
    Ok(Observations {
        points,
        y: need_y.then_some(y),
    })
}

pub fn read_observations_file(path: &Path, need_y: bool) -> CliResult<Observations> {
    let f = std::fs::File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    read_observations(f, need_y)
}

/// Per-node output with optional interval columns.
pub struct GridRows<'a> {
    pub nodes: &'a [SpherePoint],
    pub estimate: &'a [f64],
    pub intervals: Option<IntervalColumns<'a>>,
}

pub struct IntervalColumns<'a> {
    pub stderr: Vec<f64>,
    pub low: &'a [f64],
    pub high: &'a [f64],
    pub flags: Vec<&'static str>,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_grid<W: Write>(out: W, rows: &GridRows<'_>) -> CliResult<()> {
    let io = |e: csv::Error| CliError::Input(format!("cannot write output: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["lon", "lat", "estimate"];
    if rows.intervals.is_some() {
        header.extend(["stderr", "ci_low", "ci_high", "flag"]);
    }
    w.write_record(&header).map_err(io)?;
    for (i, x) in rows.nodes.iter().enumerate() {
        let (lon, lat) = point_to_lonlat(x);
        let mut rec = vec![num(lon), num(lat), num(rows.estimate[i])];
        if let Some(iv) = &rows.intervals {
            rec.extend([
                num(iv.stderr[i]),
                num(iv.low[i]),
                num(iv.high[i]),
                iv.flags[i].to_string(),
            ]);
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()
        .map_err(|e| CliError::Input(format!("cannot write output: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lonlat_round_trip() {
        for lon in [0.0, 12.5, 179.0, 359.9] {
            for lat in [-89.0, -30.0, 0.0, 45.5, 89.0] {
                let (a, b) = point_to_lonlat(&lonlat_to_point(lon, lat).unwrap());
                assert!((a - lon).abs() < 1e-9 && (b - lat).abs() < 1e-9);
            }
        }
        let p = lonlat_to_point(0.0, 90.0).unwrap();
        assert!((p.coords()[2] - 1.0).abs() < 1e-15);
        assert!(lonlat_to_point(0.0, 91.0).is_err());
    }

    #[test]
    fn reads_csv() {
        let obs = read_observations("lon,lat,y\n10,20,1.5\n350, -5 ,2\n".as_bytes(), true).unwrap();
        assert_eq!(obs.points.len(), 2);
        assert_eq!(obs.y.unwrap(), vec![1.5, 2.0]);
        let err = read_observations("lon,lat\n1,2\n".as_bytes(), true).unwrap_err();
        assert!(err.to_string().contains("`y`"));
        assert_eq!(err.exit_code(), 2);
        assert!(read_observations("lon,lat\n1,abc\n".as_bytes(), false).is_err());
        assert!(read_observations("lon,lat\n".as_bytes(), false).is_err());
    }
}
