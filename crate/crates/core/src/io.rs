//! JSON formats.
//!
//! Numbers are written with 17 significant digits, which round-trips every
//! finite binary64 value exactly. Non-finite values are written as `null`.
//!
//! * tensor: `{"shape": [n_1, …], "data": [row-major entries]}`
//! * matrix: a two-mode tensor
//! * odeco: `{"shape": […], "alphas": […], "factors": [matrix, …]}`
//! * HOSVD: `{"core": tensor, "factors": [matrix, …]}`

use std::path::Path;

use serde::ser::{Serialize, Serializer};
use serde_json::value::RawValue;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::odeco::{make_odeco, OdecoRep};
use crate::spectral::{Hosvd, ModeSpectra};
use crate::subdiff::{ConjugateEstimate, ConjugateValue, MembershipCertificate, Verdict};
use crate::tensor::{DenseTensor, Shape};
use crate::vonneumann::{
    BlockPartition, Proportionality, StructuralEquality, StructureReport, VnReport,
};

/// An `f64` serialized with 17 significant digits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(format!("{:.16e}", self.0))
                .map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

fn sig(v: &[f64]) -> Vec<Sig17> {
    v.iter().copied().map(Sig17).collect()
}

fn to_string<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}

#[derive(serde::Serialize)]
struct TensorOut<'a> {
    shape: &'a [usize],
    data: Vec<Sig17>,
}

impl<'a> TensorOut<'a> {
    fn of(t: &'a DenseTensor) -> Self {
        Self {
            shape: t.shape().dims(),
            data: sig(t.data()),
        }
    }
}

#[derive(serde::Serialize)]
struct MatrixOut {
    shape: [usize; 2],
    data: Vec<Sig17>,
}

impl MatrixOut {
    fn of(m: &Matrix) -> Self {
        Self {
            shape: [m.rows(), m.cols()],
            data: sig(m.data()),
        }
    }
}

pub fn tensor_to_json(t: &DenseTensor) -> String {
    to_string(&TensorOut::of(t))
}

pub fn matrix_to_json(m: &Matrix) -> String {
    to_string(&MatrixOut::of(m))
}

pub fn odeco_to_json(rep: &OdecoRep) -> String {
    #[derive(serde::Serialize)]
    struct Out<'a> {
        shape: &'a [usize],
        alphas: Vec<Sig17>,
        factors: Vec<MatrixOut>,
    }
    to_string(&Out {
        shape: rep.shape().dims(),
        alphas: sig(rep.alphas()),
        factors: rep.factors().iter().map(MatrixOut::of).collect(),
    })
}

pub fn hosvd_to_json(h: &Hosvd) -> String {
    #[derive(serde::Serialize)]
    struct Out<'a> {
        core: TensorOut<'a>,
        factors: Vec<MatrixOut>,
    }
    to_string(&Out {
        core: TensorOut::of(&h.core),
        factors: h.factors.iter().map(MatrixOut::of).collect(),
    })
}

pub fn spectra_to_json(s: &ModeSpectra) -> String {
    #[derive(serde::Serialize)]
    struct Out {
        spectra: Vec<Vec<Sig17>>,
    }
    to_string(&Out {
        spectra: s.per_mode.iter().map(|v| sig(v)).collect(),
    })
}

#[derive(serde::Serialize)]
struct VnOut {
    inner: Sig17,
    per_mode_bound: Vec<Sig17>,
    per_mode_gap: Vec<Sig17>,
    equality: bool,
    scale: Sig17,
}

impl VnOut {
    fn of(r: &VnReport) -> Self {
        Self {
            inner: Sig17(r.inner),
            per_mode_bound: sig(&r.per_mode_bound),
            per_mode_gap: sig(&r.per_mode_gap),
            equality: r.equality,
            scale: Sig17(r.scale),
        }
    }
}

pub fn vn_report_to_json(r: &VnReport) -> String {
    to_string(&VnOut::of(r))
}

pub fn partition_to_json(p: &BlockPartition) -> String {
    to_string(&serde_json::json!({ "blocks": p.blocks }))
}

#[derive(serde::Serialize)]
struct BlockOut {
    relation: &'static str,
    constant: Sig17,
    residual: Sig17,
    ok: bool,
}

#[derive(serde::Serialize)]
struct StructureOut {
    holds: bool,
    ordered: bool,
    outside_residual_x: Sig17,
    outside_residual_y: Sig17,
    blocks: Vec<BlockOut>,
}

impl StructureOut {
    fn of(s: &StructureReport) -> Self {
        Self {
            holds: s.holds,
            ordered: s.ordered,
            outside_residual_x: Sig17(s.outside_residual_x),
            outside_residual_y: Sig17(s.outside_residual_y),
            blocks: s
                .blocks
                .iter()
                .map(|b| BlockOut {
                    relation: match b.proportionality {
                        Proportionality::YOverX(_) => "y=c*x",
                        Proportionality::XOverY(_) => "x=c*y",
                        Proportionality::BothZero => "both-zero",
                    },
                    constant: Sig17(b.proportionality.constant()),
                    residual: Sig17(b.residual),
                    ok: b.ok,
                })
                .collect(),
        }
    }
}

pub fn structural_equality_to_json(s: &StructuralEquality) -> String {
    #[derive(serde::Serialize)]
    struct Out<'a> {
        holds: bool,
        partition: &'a [Vec<Vec<usize>>],
        structure: StructureOut,
        vn: VnOut,
    }
    to_string(&Out {
        holds: s.holds,
        partition: &s.partition.blocks,
        structure: StructureOut::of(&s.structure),
        vn: VnOut::of(&s.vn),
    })
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Accepted => "accepted",
        Verdict::RejectedExact => "rejected-exact",
        Verdict::RejectedConservative => "rejected-conservative",
    }
}

pub fn certificate_to_json(c: &MembershipCertificate) -> String {
    #[derive(serde::Serialize)]
    struct Out<'a> {
        accepted: bool,
        verdict: &'static str,
        vn_gaps: Vec<Sig17>,
        pairing_residual: Sig17,
        dual_norm_value: Sig17,
        norm_value: Sig17,
        scale: Sig17,
        tol: Sig17,
        notes: &'a [String],
    }
    to_string(&Out {
        accepted: c.accepted,
        verdict: verdict_name(c.verdict),
        vn_gaps: sig(&c.vn_gaps),
        pairing_residual: Sig17(c.pairing_residual),
        dual_norm_value: Sig17(c.dual_norm_value),
        norm_value: Sig17(c.norm_value),
        scale: Sig17(c.scale),
        tol: Sig17(c.tol),
        notes: &c.notes,
    })
}

pub fn conjugate_estimate_to_json(e: &ConjugateEstimate) -> String {
    #[derive(serde::Serialize)]
    struct Out<'a> {
        max_sampled: Sig17,
        evaluations: usize,
        analytic: &'static str,
        consistent: bool,
        certificate: TensorOut<'a>,
    }
    let consistent = match e.analytic {
        ConjugateValue::Zero => e.max_sampled <= 1e-6,
        ConjugateValue::Infinite => true,
    };
    to_string(&Out {
        max_sampled: Sig17(e.max_sampled),
        evaluations: e.evaluations,
        analytic: match e.analytic {
            ConjugateValue::Zero => "zero",
            ConjugateValue::Infinite => "infinite",
        },
        consistent,
        certificate: TensorOut::of(&e.certificate),
    })
}

fn format_err(field: &str, message: impl Into<String>) -> Error {
    Error::Format {
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| format_err("document", e.to_string()))
}

fn object<'a>(v: &'a Value, field: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| format_err(field, "expected an object"))
}

fn member<'a>(
    obj: &'a Map<String, Value>,
    name: &str,
    prefix: &str,
) -> Result<(&'a Value, String)> {
    let path = if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    };
    match obj.get(name) {
        Some(v) => Ok((v, path)),
        None => Err(format_err(&path, "missing field")),
    }
}

fn array<'a>(v: &'a Value, field: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| format_err(field, "expected an array"))
}

fn usize_list(v: &Value, field: &str) -> Result<Vec<usize>> {
    array(v, field)?
        .iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_u64()
                .and_then(|u| usize::try_from(u).ok())
                .ok_or_else(|| {
                    format_err(&format!("{field}[{i}]"), "expected a non-negative integer")
                })
        })
        .collect()
}

fn f64_list(v: &Value, field: &str) -> Result<Vec<f64>> {
    array(v, field)?
        .iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64()
                .filter(|f| f.is_finite())
                .ok_or_else(|| format_err(&format!("{field}[{i}]"), "expected a finite number"))
        })
        .collect()
}

fn shape_at(v: &Value, field: &str) -> Result<Shape> {
    Shape::new(usize_list(v, field)?).map_err(|e| format_err(field, e.to_string()))
}

fn tensor_value(v: &Value, prefix: &str) -> Result<DenseTensor> {
    let obj = object(
        v,
        if prefix.is_empty() {
            "document"
        } else {
            prefix
        },
    )?;
    let (sv, sp) = member(obj, "shape", prefix)?;
    let shape = shape_at(sv, &sp)?;
    let (dv, dp) = member(obj, "data", prefix)?;
    let data = f64_list(dv, &dp)?;
    if data.len() != shape.numel() {
        return Err(format_err(
            &dp,
            format!(
                "expected {} entries for shape {:?}, found {}",
                shape.numel(),
                shape.dims(),
                data.len()
            ),
        ));
    }
    DenseTensor::new(shape, data).map_err(|e| format_err(&dp, e.to_string()))
}

fn matrix_value(v: &Value, prefix: &str) -> Result<Matrix> {
    let t = tensor_value(v, prefix)?;
    if t.order() != 2 {
        return Err(format_err(
            &format!("{prefix}.shape"),
            "a matrix needs exactly two dimensions",
        ));
    }
    let (r, c) = (t.shape().dims()[0], t.shape().dims()[1]);
    Matrix::new(r, c, t.into_data()).map_err(|e| format_err(prefix, e.to_string()))
}

fn matrix_list(v: &Value, field: &str) -> Result<Vec<Matrix>> {
    array(v, field)?
        .iter()
        .enumerate()
        .map(|(i, m)| matrix_value(m, &format!("{field}[{i}]")))
        .collect()
}

pub fn tensor_from_json(text: &str) -> Result<DenseTensor> {
    tensor_value(&parse(text)?, "")
}

pub fn matrix_from_json(text: &str) -> Result<Matrix> {
    matrix_value(&parse(text)?, "")
}

/// Parses and validates an odeco representation (see [`make_odeco`]).
pub fn odeco_from_json(text: &str) -> Result<OdecoRep> {
    let v = parse(text)?;
    let obj = object(&v, "document")?;
    let (sv, sp) = member(obj, "shape", "")?;
    let shape = shape_at(sv, &sp)?;
    let (av, ap) = member(obj, "alphas", "")?;
    let alphas = f64_list(av, &ap)?;
    let (fv, fp) = member(obj, "factors", "")?;
    let factors = matrix_list(fv, &fp)?;
    make_odeco(alphas, factors, shape)
}

pub fn hosvd_from_json(text: &str) -> Result<Hosvd> {
    let v = parse(text)?;
    let obj = object(&v, "document")?;
    let (cv, cp) = member(obj, "core", "")?;
    let core = tensor_value(cv, &cp)?;
    let (fv, fp) = member(obj, "factors", "")?;
    Ok(Hosvd {
        core,
        factors: matrix_list(fv, &fp)?,
    })
}

/// A list of frame matrices, given either as a bare array or under a
/// `"factors"` key (so HOSVD files can be used directly).
pub fn frames_from_json(text: &str) -> Result<Vec<Matrix>> {
    let v = parse(text)?;
    match &v {
        Value::Array(_) => matrix_list(&v, "frames"),
        Value::Object(obj) => {
            let (fv, fp) = member(obj, "factors", "")?;
            matrix_list(fv, &fp)
        }
        _ => Err(format_err(
            "document",
            "expected an array of matrices or an object with \"factors\"",
        )),
    }
}

pub fn partition_from_json(text: &str) -> Result<BlockPartition> {
    let v = parse(text)?;
    let obj = object(&v, "document")?;
    let (bv, bp) = member(obj, "blocks", "")?;
    let blocks = array(bv, &bp)?
        .iter()
        .enumerate()
        .map(|(b, block)| {
            let field = format!("{bp}[{b}]");
            array(block, &field)?
                .iter()
                .enumerate()
                .map(|(d, set)| usize_list(set, &format!("{field}[{d}]")))
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockPartition { blocks })
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_tensor(path: &Path) -> Result<DenseTensor> {
    tensor_from_json(&read_file(path)?)
}

pub fn read_odeco(path: &Path) -> Result<OdecoRep> {
    odeco_from_json(&read_file(path)?)
}

pub fn read_frames(path: &Path) -> Result<Vec<Matrix>> {
    frames_from_json(&read_file(path)?)
}

pub fn write_tensor(path: &Path, t: &DenseTensor) -> Result<()> {
    write_file(path, &tensor_to_json(t))
}

pub fn write_odeco(path: &Path, rep: &OdecoRep) -> Result<()> {
    write_file(path, &odeco_to_json(rep))
}
