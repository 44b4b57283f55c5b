//! Weight and feature-map ingestion: JSON manifest plus raw little-endian blob.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FeatureMap, LayerWeights};

#[derive(Debug, Serialize, Deserialize)]
struct WeightManifest {
    layers: Vec<ManifestLayer>,
    blob: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestLayer {
    name: String,
    out_channels: usize,
    in_channels: usize,
    kernel_h: usize,
    kernel_w: usize,
    stride: usize,
    padding: usize,
    dtype: String,
    offset_bytes: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct FeatureMapManifest {
    channels: usize,
    height: usize,
    width: usize,
    dtype: String,
    offset_bytes: u64,
    blob: String,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn blob_path(manifest_path: &Path, blob: &str) -> PathBuf {
    match manifest_path.parent() {
        Some(dir) => dir.join(blob),
        None => PathBuf::from(blob),
    }
}

/// Symmetric max-abs quantization of float values to `weight_bits` signed
/// fixed point. An all-zero input maps to all zeros.
pub fn quantize_symmetric(values: &[f32], weight_bits: u32) -> Vec<i32> {
    let qmax = ((1i64 << (weight_bits - 1)) - 1) as f64;
    let max_abs = values.iter().fold(0.0f64, |m, &v| m.max((v as f64).abs()));
    if max_abs == 0.0 {
        return vec![0; values.len()];
    }
    values
        .iter()
        .map(|&v| ((v as f64) / max_abs * qmax).round() as i32)
        .collect()
}

fn decode_values(
    name: &str,
    dtype: &str,
    blob: &[u8],
    offset: u64,
    count: usize,
    weight_bits: u32,
) -> Result<Vec<i32>> {
    let elem_size: u64 = match dtype {
        "i16" => 2,
        "f32" => 4,
        other => return Err(Error::UnsupportedDtype(other.to_string())),
    };
    let needed = offset + elem_size * count as u64;
    if needed > blob.len() as u64 {
        return Err(Error::BlobLengthMismatch {
            name: name.to_string(),
            needed_bytes: needed,
            available_bytes: blob.len() as u64,
        });
    }
    let start = offset as usize;
    let bytes = &blob[start..start + (elem_size as usize) * count];
    match dtype {
        "i16" => Ok(bytes
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as i32)
            .collect()),
        "f32" => {
            let floats: Vec<f32> = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            Ok(quantize_symmetric(&floats, weight_bits))
        }
        _ => unreachable!(),
    }
}

/// Load all layers named by a weight manifest, in manifest order.
/// Float inputs are quantized symmetrically to `weight_bits`.
pub fn load_weights(manifest_path: &Path, weight_bits: u32) -> Result<Vec<LayerWeights>> {
    let text = read_file(manifest_path)?;
    let manifest: WeightManifest =
        serde_json::from_slice(&text).map_err(|e| Error::Manifest(e.to_string()))?;
    let blob = read_file(&blob_path(manifest_path, &manifest.blob))?;

    let mut layers = Vec::with_capacity(manifest.layers.len());
    for entry in &manifest.layers {
        let count = entry
            .out_channels
            .checked_mul(entry.in_channels)
            .and_then(|n| n.checked_mul(entry.kernel_h))
            .and_then(|n| n.checked_mul(entry.kernel_w))
            .ok_or_else(|| Error::InvalidDimension(format!("layer '{}': size overflow", entry.name)))?;
        if count == 0 {
            return Err(Error::InvalidDimension(format!(
                "layer '{}': dimensions must be positive",
                entry.name
            )));
        }
        let values = decode_values(
            &entry.name,
            &entry.dtype,
            &blob,
            entry.offset_bytes,
            count,
            weight_bits,
        )?;
        layers.push(LayerWeights::new(
            entry.name.clone(),
            entry.out_channels,
            entry.in_channels,
            entry.kernel_h,
            entry.kernel_w,
            entry.stride,
            entry.padding,
            values,
            weight_bits,
        )?);
    }
    Ok(layers)
}

/// Write layers as a canonical i16 manifest + blob pair. Offsets are packed
/// in layer order, so loading and re-writing quantized weights is
/// byte-identical.
pub fn write_weights(manifest_path: &Path, layers: &[LayerWeights]) -> Result<()> {
    let blob_name = manifest_path
        .file_stem()
        .map(|s| format!("{}.bin", s.to_string_lossy()))
        .unwrap_or_else(|| "weights.bin".to_string());

    let mut blob: Vec<u8> = Vec::new();
    let mut entries = Vec::with_capacity(layers.len());
    for layer in layers {
        let offset = blob.len() as u64;
        for &w in layer.weights() {
            blob.extend_from_slice(&(w as i16).to_le_bytes());
        }
        entries.push(ManifestLayer {
            name: layer.name.clone(),
            out_channels: layer.out_channels,
            in_channels: layer.in_channels,
            kernel_h: layer.kernel_h,
            kernel_w: layer.kernel_w,
            stride: layer.stride,
            padding: layer.padding,
            dtype: "i16".to_string(),
            offset_bytes: offset,
        });
    }
    let manifest = WeightManifest { layers: entries, blob: blob_name.clone() };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(manifest_path, json).map_err(|e| Error::io(manifest_path, e))?;
    let blob_file = blob_path(manifest_path, &blob_name);
    fs::write(&blob_file, blob).map_err(|e| Error::io(blob_file.clone(), e))?;
    Ok(())
}

/// Load one C×H×W activation map using the same manifest + blob convention
/// as weights.
pub fn load_feature_map(manifest_path: &Path, weight_bits: u32) -> Result<FeatureMap> {
    let text = read_file(manifest_path)?;
    let manifest: FeatureMapManifest =
        serde_json::from_slice(&text).map_err(|e| Error::Manifest(e.to_string()))?;
    let blob = read_file(&blob_path(manifest_path, &manifest.blob))?;
    let count = manifest.channels * manifest.height * manifest.width;
    if count == 0 {
        return Err(Error::InvalidDimension("feature map dimensions must be positive".into()));
    }
    let values = decode_values(
        "feature map",
        &manifest.dtype,
        &blob,
        manifest.offset_bytes,
        count,
        weight_bits,
    )?;
    FeatureMap::new(manifest.channels, manifest.height, manifest.width, values)
}

/// Write a feature map as an i16 manifest + blob pair.
pub fn write_feature_map(manifest_path: &Path, map: &FeatureMap) -> Result<()> {
    let blob_name = manifest_path
        .file_stem()
        .map(|s| format!("{}.bin", s.to_string_lossy()))
        .unwrap_or_else(|| "input.bin".to_string());
    let mut blob: Vec<u8> = Vec::with_capacity(map.data().len() * 2);
    for &v in map.data() {
        blob.extend_from_slice(&(v as i16).to_le_bytes());
    }
    let manifest = FeatureMapManifest {
        channels: map.channels,
        height: map.height,
        width: map.width,
        dtype: "i16".to_string(),
        offset_bytes: 0,
        blob: blob_name.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(manifest_path, json).map_err(|e| Error::io(manifest_path, e))?;
    let blob_file = blob_path(manifest_path, &blob_name);
    fs::write(&blob_file, blob).map_err(|e| Error::io(blob_file.clone(), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_manifest(dir: &Path, layers_json: &str, blob: &[u8]) -> PathBuf {
        let manifest = dir.join("manifest.json");
        fs::write(
            &manifest,
            format!(r#"{{"layers":[{layers_json}],"blob":"weights.bin"}}"#),
        )
        .unwrap();
        fs::write(dir.join("weights.bin"), blob).unwrap();
        manifest
    }

    const LAYER_16X1: &str = r#"{"name":"conv","out_channels":16,"in_channels":1,"kernel_h":3,"kernel_w":3,"stride":1,"padding":0,"dtype":"i16","offset_bytes":0}"#;

    #[test]
    fn loads_declared_layer() {
        let dir = tempfile::tempdir().unwrap();
        let blob: Vec<u8> = (0..144i16).flat_map(|v| v.to_le_bytes()).collect();
        let manifest = write_manifest(dir.path(), LAYER_16X1, &blob);
        let layers = load_weights(&manifest, 16).unwrap();
        assert_eq!(layers.len(), 1);
        assert_eq!(layers[0].weight_count(), 144);
        assert_eq!(layers[0].weights()[143], 143);
    }

    #[test]
    fn short_blob_is_length_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let blob: Vec<u8> = (0..100i16).flat_map(|v| v.to_le_bytes()).collect();
        let manifest = write_manifest(dir.path(), LAYER_16X1, &blob);
        let err = load_weights(&manifest, 16).unwrap_err();
        assert!(matches!(err, Error::BlobLengthMismatch { .. }), "{err}");
        assert!(err.to_string().contains("blob length mismatch"));
    }

    #[test]
    fn unsupported_dtype_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let layer = LAYER_16X1.replace("i16", "f64");
        let manifest = write_manifest(dir.path(), &layer, &[0u8; 1152]);
        let err = load_weights(&manifest, 16).unwrap_err();
        assert!(matches!(err, Error::UnsupportedDtype(tag) if tag == "f64"));
    }

    #[test]
    fn missing_manifest_reports_path() {
        let err = load_weights(Path::new("/nonexistent/m.json"), 16).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/m.json"));
    }

    #[test]
    fn float_weights_quantize_symmetrically() {
        // {-1.0, 0.0, 1.0} at 16 bits lands on {-32767, 0, 32767}.
        let q = quantize_symmetric(&[-1.0, 0.0, 1.0], 16);
        assert_eq!(q, vec![-32767, 0, 32767]);
        let q = quantize_symmetric(&[0.0, 0.0], 16);
        assert_eq!(q, vec![0, 0]);
        let q = quantize_symmetric(&[-0.5, 1.0], 16);
        assert_eq!(q, vec![-16384, 32767]);
    }

    #[test]
    fn float_manifest_loads_quantized() {
        let dir = tempfile::tempdir().unwrap();
        let layer = r#"{"name":"f","out_channels":1,"in_channels":1,"kernel_h":1,"kernel_w":3,"stride":1,"padding":0,"dtype":"f32","offset_bytes":0}"#;
        let blob: Vec<u8> = [-1.0f32, 0.0, 1.0].iter().flat_map(|v| v.to_le_bytes()).collect();
        let manifest = write_manifest(dir.path(), layer, &blob);
        let layers = load_weights(&manifest, 16).unwrap();
        assert_eq!(layers[0].weights(), &[-32767, 0, 32767]);
    }

    #[test]
    fn write_then_load_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let layer = LayerWeights::new(
            "conv",
            2,
            1,
            2,
            2,
            1,
            0,
            vec![5, -7, 0, 32767, -32768, 1, 2, 3],
            16,
        )
        .unwrap();
        let first = dir.path().join("a.json");
        write_weights(&first, std::slice::from_ref(&layer)).unwrap();
        let loaded = load_weights(&first, 16).unwrap();
        assert_eq!(loaded[0], layer);
        let second = dir.path().join("b.json");
        write_weights(&second, &loaded).unwrap();
        let blob_a = fs::read(dir.path().join("a.bin")).unwrap();
        let blob_b = fs::read(dir.path().join("b.bin")).unwrap();
        assert_eq!(blob_a, blob_b);
    }

    #[test]
    fn feature_map_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let map = FeatureMap::new(2, 2, 2, vec![1, 0, -3, 4, 5, 6, 0, 8]).unwrap();
        let path = dir.path().join("input.json");
        write_feature_map(&path, &map).unwrap();
        let loaded = load_feature_map(&path, 16).unwrap();
        assert_eq!(loaded, map);
    }
}
