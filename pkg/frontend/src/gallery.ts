export interface GalleryBundle {
    name: string;
    category: string;
    description: string;
    spec: Record<string, unknown>;
}

export function filterBundles(
    bundles: GalleryBundle[],
    name: string,
    category: string,
): GalleryBundle[] {
    const needle = name.trim().toLowerCase();
    return bundles.filter((b) => {
        if (category !== "" && b.category !== category) {
            return false;
        }
        return needle === "" || b.name.toLowerCase().includes(needle);
    });
}

export class Gallery {
    readonly element: HTMLElement;

    private readonly bundles: GalleryBundle[];
    private readonly list: HTMLElement;
    private readonly nameFilter: HTMLInputElement;
    private readonly categoryFilter: HTMLSelectElement;
    private readonly selectListeners: ((bundle: GalleryBundle) => void)[] = [];

    constructor(bundles: GalleryBundle[], dom: Document) {
        this.bundles = bundles;
        this.element = dom.createElement("div");
        this.element.className = "gallery";

        const filters = dom.createElement("div");
        filters.className = "gallery-filters";
        this.nameFilter = dom.createElement("input");
        this.nameFilter.placeholder = "Filter by name";
        this.nameFilter.addEventListener("input", () => this.refresh());
        this.categoryFilter = dom.createElement("select");
        const any = dom.createElement("option");
        any.value = "";
        any.textContent = "all categories";
        this.categoryFilter.appendChild(any);
        for (const category of [...new Set(bundles.map((b) => b.category))].sort()) {
            const option = dom.createElement("option");
            option.value = category;
            option.textContent = category;
            this.categoryFilter.appendChild(option);
        }
        this.categoryFilter.addEventListener("change", () => this.refresh());
        filters.append(this.nameFilter, this.categoryFilter);
        this.element.appendChild(filters);

        this.list = dom.createElement("ul");
        this.list.className = "gallery-list";
        this.element.appendChild(this.list);
        this.refresh();
    }

    onSelect(listener: (bundle: GalleryBundle) => void): void {
        this.selectListeners.push(listener);
    }

    visibleNames(): string[] {
        return [...this.list.querySelectorAll("li")].map(
            (item) => item.dataset.name ?? "",
        );
    }

    refresh(): void {
        const dom = this.element.ownerDocument;
        this.list.textContent = "";
        const shown = filterBundles(
            this.bundles, this.nameFilter.value, this.categoryFilter.value,
        );
        for (const bundle of shown) {
            const item = dom.createElement("li");
            item.dataset.name = bundle.name;
            const title = dom.createElement("strong");
            title.textContent = bundle.name;
            const category = dom.createElement("span");
            category.className = "gallery-category";
            category.textContent = bundle.category;
            const blurb = dom.createElement("p");
            blurb.textContent = bundle.description;
            item.append(title, category, blurb);
            item.addEventListener("click", () => {
                for (const listener of this.selectListeners) {
                    listener(bundle);
                }
            });
            this.list.appendChild(item);
        }
    }

    setFilters(name: string, category: string): void {
        this.nameFilter.value = name;
        this.categoryFilter.value = category;
        this.refresh();
    }
}
