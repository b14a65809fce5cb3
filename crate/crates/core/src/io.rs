//! CSV exchange formats. Floats are written in shortest round-trip form, so
//! reading a file back reproduces the values bit for bit.
//!
//! | file        | columns                                          |
//! |-------------|--------------------------------------------------|
//! | spectrum    | `slot,beam,s2f1f`                                |
//! | frames      | `slot,beam,x1f,y1f,x2f,y2f,s2f1f`                |
//! | sinogram    | `beam,projection,angle_deg,offset_cm,absorbance` |
//! | image       | one grid row per line, `nx` values, y ascending  |

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dli::{HarmonicSpectrum, QuadratureFrame};
use crate::mux::beam_index;
use crate::tomography::{BeamGeometry, ConcentrationImage, PixelGrid};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct SpectrumRow {
    slot: usize,
    beam: usize,
    s2f1f: f64,
}

pub fn write_spectrum(w: impl Write, spectrum: &HarmonicSpectrum) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (&slot, &s2f1f) in spectrum.slots.iter().zip(&spectrum.values) {
        out.serialize(SpectrumRow { slot, beam: spectrum.beam, s2f1f })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_spectrum(r: impl Read) -> Result<HarmonicSpectrum> {
    let mut beam = None;
    let mut slots = Vec::new();
    let mut values = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize() {
        let row: SpectrumRow = row?;
        match beam {
            None => beam = Some(row.beam),
            Some(b) if b != row.beam => {
                return Err(Error::shape(format!("spectrum file mixes beams {b} and {}", row.beam)))
            }
            _ => {}
        }
        slots.push(row.slot);
        values.push(row.s2f1f);
    }
    let beam = beam.ok_or_else(|| Error::shape("spectrum file has no rows"))?;
    Ok(HarmonicSpectrum { beam, slots, values })
}

pub fn save_spectrum(path: impl AsRef<Path>, spectrum: &HarmonicSpectrum) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    write_spectrum(&mut f, spectrum)?;
    f.flush()?;
    Ok(())
}

pub fn load_spectrum(path: impl AsRef<Path>) -> Result<HarmonicSpectrum> {
    read_spectrum(File::open(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameRow {
    slot: usize,
    beam: usize,
    x1f: f64,
    y1f: f64,
    x2f: f64,
    y2f: f64,
    s2f1f: f64,
}

/// Raw quadratures with their normalised value, beam taken from the slot.
pub fn write_frames(w: impl Write, frames: &[QuadratureFrame], s2f1f: &[f64], n_beams: usize) -> Result<()> {
    if frames.len() != s2f1f.len() {
        return Err(Error::shape("one 2f/1f value per frame expected"));
    }
    let mut out = csv::Writer::from_writer(w);
    for (f, &s) in frames.iter().zip(s2f1f) {
        out.serialize(FrameRow {
            slot: f.slot,
            beam: beam_index(f.slot, n_beams)?,
            x1f: f.x1f,
            y1f: f.y1f,
            x2f: f.x2f,
            y2f: f.y2f,
            s2f1f: s,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_frames(r: impl Read) -> Result<Vec<(QuadratureFrame, f64)>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| {
            let row: FrameRow = row?;
            Ok((
                QuadratureFrame { slot: row.slot, x1f: row.x1f, y1f: row.y1f, x2f: row.x2f, y2f: row.y2f },
                row.s2f1f,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinogramRow {
    /// 1-based beam number.
    pub beam: usize,
    pub projection: usize,
    pub angle_deg: f64,
    pub offset_cm: f64,
    pub absorbance: f64,
}

pub fn sinogram_rows(geom: &BeamGeometry, absorbance: &[f64]) -> Result<Vec<SinogramRow>> {
    if absorbance.len() != geom.len() {
        return Err(Error::shape(format!(
            "{} absorbances for {} beams",
            absorbance.len(),
            geom.len()
        )));
    }
    Ok(geom
        .beams
        .iter()
        .zip(absorbance)
        .enumerate()
        .map(|(i, (b, &a))| SinogramRow {
            beam: i + 1,
            projection: b.projection,
            angle_deg: b.angle_deg,
            offset_cm: b.offset_cm,
            absorbance: a,
        })
        .collect())
}

pub fn write_sinogram(w: impl Write, rows: &[SinogramRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_sinogram(r: impl Read) -> Result<Vec<SinogramRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Sidecar describing an image CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMetadata {
    pub grid: PixelGrid,
    pub units: String,
    pub row_order: String,
}

impl ImageMetadata {
    pub fn for_grid(grid: PixelGrid) -> Self {
        Self {
            grid,
            units: "mole_fraction".into(),
            row_order: "y_ascending".into(),
        }
    }
}

pub fn write_image(w: impl Write, image: &ConcentrationImage) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in image.values.chunks_exact(image.grid.nx) {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_image(r: impl Read, grid: PixelGrid) -> Result<ConcentrationImage> {
    let mut values = Vec::with_capacity(grid.n_pixels());
    let mut rows = 0;
    for rec in csv::ReaderBuilder::new().has_headers(false).from_reader(r).deserialize() {
        let row: Vec<f64> = rec?;
        if row.len() != grid.nx {
            return Err(Error::shape(format!("image row {rows} has {} values, expected {}", row.len(), grid.nx)));
        }
        values.extend(row);
        rows += 1;
    }
    if rows != grid.ny {
        return Err(Error::shape(format!("image has {rows} rows, expected {}", grid.ny)));
    }
    Ok(ConcentrationImage { grid, values })
}

/// Writes `stem.csv` and `stem.json` side by side.
pub fn save_image(dir: impl AsRef<Path>, stem: &str, image: &ConcentrationImage) -> Result<()> {
    let dir = dir.as_ref();
    let mut f = BufWriter::new(File::create(dir.join(format!("{stem}.csv")))?);
    write_image(&mut f, image)?;
    f.flush()?;
    let meta = serde_json::to_string_pretty(&ImageMetadata::for_grid(image.grid))
        .map_err(|e| Error::Numeric(e.to_string()))?;
    std::fs::write(dir.join(format!("{stem}.json")), meta + "\n")?;
    Ok(())
}

pub fn load_image(dir: impl AsRef<Path>, stem: &str) -> Result<ConcentrationImage> {
    let dir = dir.as_ref();
    let meta: ImageMetadata = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)
        .map_err(|e| Error::Config(format!("{stem}.json: {e}")))?;
    read_image(File::open(dir.join(format!("{stem}.csv")))?, meta.grid)
}
