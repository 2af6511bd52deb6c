//! Grid images: key-pose crops tiled at native resolution, separated by
//! zero-valued borders.
//!
//! Layout is row-major and near square (`ceil(sqrt(K))` columns). Each slot
//! is as wide as the widest cell in its column and as tall as the tallest
//! cell in its row; cells sit at the slot's top-left corner. Every pixel not
//! covered by a cell is black.

mod draw;

pub use draw::{
    disc_pixels, draw_pose_attention, draw_pose_with, limb_pixels, DrawConfig, PoseStyle, JOINT_COLOR, JOINT_RADIUS,
    LIMB_COLORS,
};

use std::fs;
use std::path::Path;

use image::{GenericImage, RgbImage};

use crate::cluster::KeyPoseSet;
use crate::error::{GrarError, Result};
use crate::pose::{PoseSequence, TrackCrops};

pub const MAX_CELLS: usize = 16;
pub const DEFAULT_BORDER_PX: u32 = 3;
pub const DEFAULT_MAX_CANVAS: (u32, u32) = (1200, 1200);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridLayout {
    pub columns: usize,
    pub rows: usize,
    pub border_px: u32,
    pub max_canvas: (u32, u32),
}

impl GridLayout {
    pub fn for_cells(k: usize, border_px: u32) -> Self {
        let k = k.max(1);
        let mut columns = (k as f64).sqrt().ceil() as usize;
        // guard against sqrt rounding on perfect squares
        while columns * columns < k {
            columns += 1;
        }
        while columns > 1 && (columns - 1) * (columns - 1) >= k {
            columns -= 1;
        }
        GridLayout {
            columns,
            rows: k.div_ceil(columns),
            border_px,
            max_canvas: DEFAULT_MAX_CANVAS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridImage {
    pub raster: RgbImage,
    pub cells: Vec<CellRect>,
    pub label: Option<String>,
    pub person_id: String,
    /// Frame index of the key pose in each cell.
    pub provenance: Vec<u32>,
}

impl GridImage {
    /// Save the raster as PNG, creating parent directories.
    pub fn write_png(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| GrarError::io(dir, e))?;
        }
        self.raster
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| GrarError::image(path, e))
    }

    /// A grid read back from a PNG; cell rectangles are not recovered.
    pub fn read_png(path: &Path, person_id: &str, label: Option<String>, provenance: Vec<u32>) -> Result<Self> {
        let raster = image::open(path)
            .map_err(|e| match e {
                image::ImageError::IoError(io) => GrarError::io(path, io),
                other => GrarError::image(path, other),
            })?
            .to_rgb8();
        Ok(GridImage {
            raster,
            cells: Vec::new(),
            label,
            person_id: person_id.to_string(),
            provenance,
        })
    }
}

pub fn compose_grid(cells: &[RgbImage], layout: &GridLayout) -> Result<GridImage> {
    if cells.is_empty() {
        return Err(GrarError::EmptyGrid);
    }
    if cells.len() > MAX_CELLS {
        return Err(GrarError::Config(format!(
            "{} cells exceeds the {MAX_CELLS}-cell limit",
            cells.len()
        )));
    }
    if layout.border_px < 1 {
        return Err(GrarError::Config("border must be at least 1 px".into()));
    }
    if layout.rows * layout.columns < cells.len() {
        return Err(GrarError::Config(format!(
            "{}x{} layout cannot hold {} cells",
            layout.rows,
            layout.columns,
            cells.len()
        )));
    }

    let mut col_w = vec![0u32; layout.columns];
    let mut row_h = vec![0u32; layout.rows];
    for (i, c) in cells.iter().enumerate() {
        let (r, col) = (i / layout.columns, i % layout.columns);
        col_w[col] = col_w[col].max(c.width());
        row_h[r] = row_h[r].max(c.height());
    }
    let b = layout.border_px;
    let width = col_w.iter().sum::<u32>() + b * (layout.columns as u32 + 1);
    let height = row_h.iter().sum::<u32>() + b * (layout.rows as u32 + 1);
    if width > layout.max_canvas.0 || height > layout.max_canvas.1 {
        return Err(GrarError::CanvasTooLarge {
            width,
            height,
            max_width: layout.max_canvas.0,
            max_height: layout.max_canvas.1,
        });
    }

    let col_x: Vec<u32> = col_w
        .iter()
        .scan(b, |x, w| {
            let here = *x;
            *x += w + b;
            Some(here)
        })
        .collect();
    let row_y: Vec<u32> = row_h
        .iter()
        .scan(b, |y, h| {
            let here = *y;
            *y += h + b;
            Some(here)
        })
        .collect();

    let mut raster = RgbImage::new(width, height);
    let mut rects = Vec::with_capacity(cells.len());
    for (i, c) in cells.iter().enumerate() {
        let rect = CellRect {
            x: col_x[i % layout.columns],
            y: row_y[i / layout.columns],
            width: c.width(),
            height: c.height(),
        };
        raster
            .copy_from(c, rect.x, rect.y)
            .expect("slot sized to hold the cell");
        rects.push(rect);
    }
    Ok(GridImage {
        raster,
        cells: rects,
        label: None,
        person_id: String::new(),
        provenance: Vec::new(),
    })
}

/// What goes into each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellContent {
    /// Raw crop.
    Rgb,
    /// Crop with the key pose drawn over it.
    #[default]
    RgbAttention,
    /// Key pose in white on a black cell of the crop's size.
    PoseOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub border_px: u32,
    pub content: CellContent,
    pub draw_limbs: bool,
    pub conf_threshold: f64,
    pub max_canvas: (u32, u32),
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            border_px: DEFAULT_BORDER_PX,
            content: CellContent::RgbAttention,
            draw_limbs: true,
            conf_threshold: crate::pose::DEFAULT_CONF_THRESHOLD,
            max_canvas: DEFAULT_MAX_CANVAS,
        }
    }
}

/// Grid of the key-pose frames of one track, in the key-pose set's order.
pub fn build_grid(
    seq: &PoseSequence,
    crops: &TrackCrops,
    keyposes: &KeyPoseSet,
    cfg: &GridConfig,
) -> Result<GridImage> {
    build_grid_from_frames(seq, crops, &keyposes.medoid_frames, cfg)
}

/// Grid of the given frames, in the given order.
pub fn build_grid_from_frames(
    seq: &PoseSequence,
    crops: &TrackCrops,
    frames: &[u32],
    cfg: &GridConfig,
) -> Result<GridImage> {
    let mut cells = Vec::with_capacity(frames.len());
    for &fi in frames {
        let crop = crops.get(fi).ok_or(GrarError::MissingCrop(fi))?;
        let frame = seq.frame(fi).ok_or(GrarError::MissingCrop(fi))?;
        let draw = |style| DrawConfig {
            conf_threshold: cfg.conf_threshold,
            draw_limbs: cfg.draw_limbs,
            style,
        };
        let cell = match cfg.content {
            CellContent::Rgb => crop.clone(),
            CellContent::RgbAttention => draw_pose_with(crop, &frame.pose, &frame.bbox, &draw(PoseStyle::Palette)),
            CellContent::PoseOnly => {
                let black = RgbImage::new(crop.width(), crop.height());
                draw_pose_with(
                    &black,
                    &frame.pose,
                    &frame.bbox,
                    &draw(PoseStyle::Mono([255, 255, 255])),
                )
            }
        };
        cells.push(cell);
    }
    let mut layout = GridLayout::for_cells(cells.len(), cfg.border_px);
    layout.max_canvas = cfg.max_canvas;
    let mut grid = compose_grid(&cells, &layout)?;
    grid.person_id = seq.person_id.clone();
    grid.provenance = frames.to_vec();
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    fn solid(w: u32, h: u32, v: u8) -> RgbImage {
        RgbImage::from_pixel(w, h, Rgb([v, v.wrapping_add(1), v.wrapping_add(2)]))
    }

    #[test]
    fn layout_shapes() {
        let l = |k| {
            let g = GridLayout::for_cells(k, 3);
            (g.rows, g.columns)
        };
        assert_eq!(l(1), (1, 1));
        assert_eq!(l(2), (1, 2));
        assert_eq!(l(3), (2, 2));
        assert_eq!(l(4), (2, 2));
        assert_eq!(l(5), (2, 3));
        assert_eq!(l(6), (2, 3));
        assert_eq!(l(9), (3, 3));
        assert_eq!(l(16), (4, 4));
    }

    #[test]
    fn single_cell_canvas() {
        let g = compose_grid(&[solid(50, 80, 10)], &GridLayout::for_cells(1, 3)).unwrap();
        assert_eq!(g.raster.dimensions(), (56, 86));
        assert_eq!(
            g.cells,
            vec![CellRect {
                x: 3,
                y: 3,
                width: 50,
                height: 80
            }]
        );
    }

    #[test]
    fn four_equal_cells_canvas() {
        let cells: Vec<_> = (0..4).map(|i| solid(100, 100, 20 + i)).collect();
        let g = compose_grid(&cells, &GridLayout::for_cells(4, 3)).unwrap();
        assert_eq!(g.raster.dimensions(), (209, 209));
        assert_eq!((g.cells[3].x, g.cells[3].y), (106, 106));
        // strip between cells 0 and 1
        for y in 3..103 {
            for x in 103..106 {
                assert_eq!(g.raster.get_pixel(x, y).0, [0, 0, 0]);
            }
        }
    }

    #[test]
    fn uneven_cells_are_top_left_anchored() {
        let cells = vec![solid(30, 40, 5), solid(50, 20, 6), solid(10, 60, 7)];
        let g = compose_grid(&cells, &GridLayout::for_cells(3, 2)).unwrap();
        // columns 30|50, rows 40|60
        assert_eq!(g.raster.dimensions(), (2 + 30 + 2 + 50 + 2, 2 + 40 + 2 + 60 + 2));
        assert_eq!((g.cells[1].x, g.cells[1].y), (34, 2));
        assert_eq!((g.cells[2].x, g.cells[2].y), (2, 44));
        assert_eq!(g.raster.get_pixel(40, 30).0, [0, 0, 0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            compose_grid(&[], &GridLayout::for_cells(1, 3)),
            Err(GrarError::EmptyGrid)
        ));
        assert!(matches!(
            compose_grid(&[solid(1300, 10, 1)], &GridLayout::for_cells(1, 3)),
            Err(GrarError::CanvasTooLarge { .. })
        ));
        let many: Vec<_> = (0..17).map(|_| solid(2, 2, 1)).collect();
        assert!(compose_grid(&many, &GridLayout::for_cells(17, 3)).is_err());
    }
}
